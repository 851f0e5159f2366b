use crisis_ssl_core::model::{init_params, TrainConfig};
use crisis_ssl_core::seed;
use crisis_ssl_core::strategies::aum_records;
use crisis_ssl_core::synthetic::ClusterSpec;
use rand::seq::index::sample;
use rand::Rng;

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// 500 separable points over 4 classes; 10% get a uniformly drawn wrong label.
fn separation(seed_value: u64) -> (f64, f64) {
    let spec = ClusterSpec::new(4, seed_value);
    let points = spec.points(125).unwrap();
    let mut rng = seed::rng(seed::derive(seed_value, 0xA0));
    let noisy: Vec<usize> = sample(&mut rng, points.len(), points.len() / 10).into_vec();
    let mut labels: Vec<usize> = points.iter().map(|(_, c)| *c).collect();
    for &i in &noisy {
        labels[i] = (labels[i] + rng.random_range(1..4)) % 4;
    }
    let ids: Vec<String> = (0..points.len()).map(|i| format!("x{i}")).collect();
    let pseudo: Vec<(&str, _, usize)> = points.iter().zip(&labels).zip(&ids).map(|(((x, _), &l), id)| (id.as_str(), x, l)).collect();
    let init = init_params(spec.dim, 0, 4, seed_value).unwrap();
    let train = TrainConfig { learning_rate: 0.05, batch_size: 16, epochs: 5, seed: seed_value, ..TrainConfig::default() };
    let records = aum_records(&init, &[], &pseudo, &train).unwrap();
    let is_noisy: std::collections::HashSet<usize> = noisy.into_iter().collect();
    let (clean, corrupt): (Vec<_>, Vec<_>) = records.iter().partition(|r| !is_noisy.contains(&r.index));
    let clean: Vec<f64> = clean.iter().map(|r| r.aum).collect();
    let corrupt: Vec<f64> = corrupt.iter().map(|r| r.aum).collect();
    let (mc, vc) = mean_var(&clean);
    let (mn, vn) = mean_var(&corrupt);
    (mc - mn, (vc / clean.len() as f64 + vn / corrupt.len() as f64).sqrt())
}

#[test]
fn planted_noise_is_separated_by_aum() {
    for s in 0..5 {
        let (gap, se) = separation(s);
        assert!(gap > 3.0 * se, "seed {s}: gap {gap:.4} vs 3 SE {:.4}", 3.0 * se);
    }
}
