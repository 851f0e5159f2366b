//! Pseudo-label arithmetic shared by the strategies.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::model::LabelDistribution;

/// Convex combination `λ·a + (1−λ)·b` of features and label distributions.
///
/// λ = 1 and λ = 0 return exact copies of `a` and `b`.
pub fn mixup(
    a: (&FeatureVector, &LabelDistribution),
    b: (&FeatureVector, &LabelDistribution),
    lambda: f64,
) -> Result<(FeatureVector, LabelDistribution)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoreError::InvalidConfig("mixup lambda must lie in [0, 1]".into()));
    }
    if a.1.len() != b.1.len() {
        return Err(CoreError::DimensionMismatch { expected: a.1.len(), actual: b.1.len() });
    }
    if a.0.dim() != b.0.dim() {
        return Err(CoreError::DimensionMismatch { expected: a.0.dim(), actual: b.0.dim() });
    }
    if lambda == 1.0 {
        return Ok((a.0.clone(), a.1.clone()));
    }
    if lambda == 0.0 {
        return Ok((b.0.clone(), b.1.clone()));
    }
    let features = a.0.linear_combination(lambda, b.0, 1.0 - lambda)?;
    let probs: Vec<f64> = a.1.probs().iter().zip(b.1.probs()).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect();
    Ok((features, LabelDistribution::from_weights(probs)?))
}

/// λ ~ Beta(α, α) folded onto [0.5, 1] so the first mixup operand dominates.
pub fn sample_mix_lambda(alpha: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let beta = Beta::new(alpha, alpha).map_err(|_| CoreError::InvalidConfig("mixup_alpha must be positive".into()))?;
    let lambda: f64 = beta.sample(rng);
    Ok(lambda.max(1.0 - lambda))
}

/// Difference between the two largest probabilities.
pub fn confidence_gap(dist: &LabelDistribution) -> Result<f64> {
    if dist.len() < 2 {
        return Err(CoreError::TooFewClasses);
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in dist.probs() {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    Ok(first - second)
}

/// Temperature sharpening `p_i^(1/T) / Σ_j p_j^(1/T)`; T = 1 is the identity.
pub fn sharpen(dist: &LabelDistribution, temperature: f64) -> Result<LabelDistribution> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(CoreError::InvalidConfig("temperature must be positive".into()));
    }
    if temperature == 1.0 {
        return Ok(dist.clone());
    }
    // Work relative to the largest probability so small temperatures do not underflow.
    let top = dist.max();
    let scaled: Vec<f64> = dist.probs().iter().map(|&p| libm::pow(p / top, 1.0 / temperature)).collect();
    LabelDistribution::from_weights(scaled)
}

/// Uniform random index in `0..len`.
pub(crate) fn pick(len: usize, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(0..len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use alloc::vec;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> LabelDistribution {
        LabelDistribution::new(p.to_vec()).unwrap()
    }

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::from_dense(values).unwrap()
    }

    #[test]
    fn mixup_endpoints_are_exact() {
        let (xa, ya) = (fv(&[0.6, 0.8, 0.0]), LabelDistribution::one_hot(0, 3));
        let (xb, yb) = (fv(&[0.0, 0.0, 1.0]), LabelDistribution::one_hot(2, 3));
        assert_eq!(mixup((&xa, &ya), (&xb, &yb), 1.0).unwrap(), (xa.clone(), ya.clone()));
        assert_eq!(mixup((&xa, &ya), (&xb, &yb), 0.0).unwrap(), (xb.clone(), yb.clone()));
        let (_, half) = mixup((&xa, &LabelDistribution::one_hot(0, 3)), (&xb, &LabelDistribution::one_hot(1, 3)), 0.5).unwrap();
        assert_eq!(half.probs(), &[0.5, 0.5, 0.0]);
        let (x, y) = mixup((&xa, &ya), (&xb, &yb), 0.25).unwrap();
        assert!((x.get(0) - 0.15).abs() < 1e-12 && (x.get(2) - 0.75).abs() < 1e-12);
        assert!((y.probs()[0] - 0.25).abs() < 1e-12 && (y.probs()[2] - 0.75).abs() < 1e-12);
        assert!(mixup((&xa, &ya), (&xb, &yb), 1.5).is_err());
    }

    #[test]
    fn gap_examples() {
        assert!((confidence_gap(&dist(&[0.7, 0.2, 0.1])).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(confidence_gap(&LabelDistribution::uniform(4)).unwrap(), 0.0);
        assert_eq!(confidence_gap(&LabelDistribution::one_hot(1, 3)).unwrap(), 1.0);
        assert!(confidence_gap(&LabelDistribution::one_hot(0, 1)).is_err());
    }

    #[test]
    fn sharpen_examples() {
        let p = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(sharpen(&p, 1.0).unwrap(), p);
        let s = sharpen(&p, 0.5).unwrap();
        for (got, want) in s.probs().iter().zip([0.658, 0.237, 0.105]) {
            assert!((got - want).abs() < 1e-3);
        }
        let cold = sharpen(&dist(&[0.6, 0.4]), 0.02).unwrap();
        assert!(cold.probs()[0] > 1.0 - 1e-6);
        let z = 0.25 + 0.09 + 0.04;
        for (got, want) in s.probs().iter().zip([0.25 / z, 0.09 / z, 0.04 / z]) {
            assert!((got - want).abs() < 1e-12);
        }
        let u = LabelDistribution::uniform(5);
        for &q in sharpen(&u, 0.1).unwrap().probs() {
            assert!((q - 0.2).abs() < 1e-12);
        }
        assert!(sharpen(&p, 0.0).is_err());
    }

    #[test]
    fn folded_lambda_range() {
        let mut rng = seed::rng(7);
        for _ in 0..500 {
            let l = sample_mix_lambda(0.75, &mut rng).unwrap();
            assert!((0.5..=1.0).contains(&l));
        }
        assert!(sample_mix_lambda(0.0, &mut rng).is_err());
    }

    fn simplex(n: usize) -> impl Strategy<Value = LabelDistribution> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|w| LabelDistribution::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn mixup_stays_on_simplex(a in simplex(4), b in simplex(4), lambda in 0.0f64..=1.0) {
            let x = fv(&[1.0, 0.0]);
            let (_, y) = mixup((&x, &a), (&x, &b), lambda).unwrap();
            let sum: f64 = y.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(y.probs().iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn gap_within_unit_interval(a in simplex(5)) {
            let g = confidence_gap(&a).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!(g < 1.0);
        }

        #[test]
        fn mixed_features_lie_between_parents(
            xa in proptest::collection::vec(-1.0f64..1.0, 6),
            xb in proptest::collection::vec(-1.0f64..1.0, 6),
            lambda in 0.0f64..=1.0,
        ) {
            let (fa, fb) = (fv(&xa), fv(&xb));
            let y = LabelDistribution::one_hot(0, 2);
            let (x, _) = mixup((&fa, &y), (&fb, &y), lambda).unwrap();
            for i in 0..6u32 {
                let (lo, hi) = (fa.get(i).min(fb.get(i)), fa.get(i).max(fb.get(i)));
                prop_assert!(x.get(i) >= lo - 1e-12 && x.get(i) <= hi + 1e-12);
            }
        }

        #[test]
        fn sharpening_keeps_argmax_and_raises_max(a in simplex(4), t in 0.05f64..1.0) {
            let s = sharpen(&a, t).unwrap();
            prop_assert_eq!(s.argmax(), a.argmax());
            prop_assert!(s.max() >= a.max() - 1e-12);
            let sum: f64 = s.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pick_in_range() {
        let mut rng = seed::rng(1);
        let v = vec![0usize; 3];
        for _ in 0..50 {
            assert!(pick(v.len(), &mut rng) < 3);
        }
    }
}
