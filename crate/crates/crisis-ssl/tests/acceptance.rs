//! One test per acceptance criterion. Each prints a `[criterion N] PASS|FAIL`
//! line with the measured quantities before asserting.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Duration;

use crisis_ssl::aggregate::aggregate;
use crisis_ssl::cache::AnnotationCache;
use crisis_ssl::config::{EventConfig, ExperimentConfig, Method, SyntheticEvent};
use crisis_ssl::core::corpus::{humaid_schema, make_split_plan, EventCorpus, Example};
use crisis_ssl::core::features::FeaturizerConfig;
use crisis_ssl::core::metrics::{ece, macro_f1};
use crisis_ssl::core::model::{
    batch_loss, init_params, loss_gradient, predict, ClassifierParams, LabelDistribution, TrainConfig, TrainExample,
};
use crisis_ssl::core::features::FeatureVector;
use crisis_ssl::core::oracle::{annotate_simulated, OracleProfile, PromptTemplate};
use crisis_ssl::core::strategies::{aum_records, run_strategy, run_supervised, RunSettings, SslTask, StrategyId};
use crisis_ssl::core::synthetic::{generate_topic_corpus, ClusterSpec};
use crisis_ssl::mock::{MockBehavior, MockServer};
use crisis_ssl::remote::{annotate_remote, AnnotationRequest, RemoteSettings};
use crisis_ssl::runner::{run_experiment, RunResult};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

/// Writes to the process stdout directly so the line survives test output capture.
fn report(n: usize, name: &str, ok: bool, detail: &str) {
    let line = format!("[criterion {n}] {} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------- 1

const EVENTS: [[usize; 10]; 10] = [
    [97, 330, 55, 258, 1362, 125, 295, 991, 727, 923],
    [74, 113, 14, 266, 0, 0, 176, 653, 218, 55],
    [62, 338, 100, 40, 303, 13, 248, 1308, 285, 56],
    [958, 758, 125, 561, 42, 0, 571, 691, 1011, 612],
    [917, 330, 38, 446, 208, 0, 224, 1034, 445, 742],
    [379, 444, 233, 482, 488, 0, 852, 1976, 1237, 287],
    [429, 397, 88, 528, 626, 0, 1317, 1113, 1651, 430],
    [154, 470, 498, 92, 211, 0, 999, 1384, 1097, 189],
    [345, 302, 17, 61, 73, 0, 218, 145, 218, 157],
    [97, 585, 413, 39, 254, 0, 207, 3005, 669, 319],
];

const SPLITS: [[(usize, usize); 4]; 10] = [
    [(50, 5113), (100, 5063), (250, 4913), (500, 4663)],
    [(40, 1529), (80, 1489), (189, 1380), (364, 1205)],
    [(50, 2703), (100, 2653), (238, 2515), (453, 2300)],
    [(45, 5284), (90, 5239), (225, 5104), (442, 4887)],
    [(45, 4339), (90, 4294), (225, 4159), (438, 3946)],
    [(45, 6333), (90, 6288), (225, 6153), (450, 5928)],
    [(45, 6534), (90, 6489), (225, 6354), (450, 6129)],
    [(45, 5049), (90, 5004), (225, 4869), (450, 4644)],
    [(45, 1491), (90, 1446), (217, 1319), (417, 1119)],
    [(45, 5543), (90, 5498), (225, 5363), (439, 5149)],
];

#[test]
fn criterion_1_split_sizes() {
    let mut matched = 0;
    let mut mismatches = Vec::new();
    for (e, (counts, expected)) in EVENTS.iter().zip(SPLITS).enumerate() {
        let train = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| (0..n).map(move |i| Example::new(format!("{c}-{i}"), "x", Some(c))))
            .collect();
        let corpus = EventCorpus::new(format!("event{e}"), humaid_schema(), train, vec![], vec![]).unwrap();
        for (k, want) in [5, 10, 25, 50].into_iter().zip(expected) {
            let plan = make_split_plan(&corpus, k, 0).unwrap();
            let got = (plan.n_labeled(), plan.n_unlabeled());
            if got == want {
                matched += 1;
            } else {
                mismatches.push(format!("event{e} k={k}: {got:?} != {want:?}"));
            }
        }
    }
    report(1, "split sizes", mismatches.is_empty(), &format!("{matched}/40 events x budgets, 80 values exact {mismatches:?}"));
}

// ---------------------------------------------------------------- 2

fn brute_f1(preds: &[usize], golds: &[usize], active: &[usize]) -> f64 {
    active
        .iter()
        .map(|&c| {
            let tp = preds.iter().zip(golds).filter(|(&p, &g)| p == c && g == c).count() as f64;
            let pp = preds.iter().filter(|&&p| p == c).count() as f64;
            let gp = golds.iter().filter(|&&g| g == c).count() as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (pp + gp)
            }
        })
        .sum::<f64>()
        / active.len() as f64
}

fn brute_ece(conf: &[f64], correct: &[bool], bins: usize) -> f64 {
    let n = conf.len() as f64;
    (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            let m: Vec<usize> =
                (0..conf.len()).filter(|&i| conf[i] >= lo && (conf[i] < hi || b + 1 == bins)).collect();
            if m.is_empty() {
                return 0.0;
            }
            let k = m.len() as f64;
            let mc = m.iter().map(|&i| conf[i]).sum::<f64>() / k;
            let acc = m.iter().filter(|&&i| correct[i]).count() as f64 / k;
            k / n * (mc - acc).abs()
        })
        .sum()
}

#[test]
fn criterion_2_metric_oracles() {
    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let f1_case = (2usize..=10).prop_flat_map(|k| {
        (1usize..=200).prop_flat_map(move |n| {
            (prop::collection::vec(0..k, n), prop::collection::vec(0..k, n), 1usize..=k).prop_map(move |(p, g, a)| {
                (p, g, (0..a).collect::<Vec<usize>>())
            })
        })
    });
    let f1 = runner.run(&f1_case, |(p, g, active)| {
        let got = macro_f1(&p, &g, &active).unwrap().macro_f1;
        prop_assert!((got - brute_f1(&p, &g, &active)).abs() <= 1e-9);
        Ok(())
    });
    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let ece_case = (1usize..=200, 1usize..=20).prop_flat_map(|(n, bins)| {
        (
            prop::collection::vec(prop_oneof![0.0f64..=1.0, (0u32..=20).prop_map(|i| i as f64 / 20.0)], n),
            prop::collection::vec(any::<bool>(), n),
            Just(bins),
        )
    });
    let ece_result = runner.run(&ece_case, |(conf, correct, bins)| {
        let got = ece(&conf, &correct, bins).unwrap().0;
        prop_assert!((got - brute_ece(&conf, &correct, bins)).abs() <= 1e-9);
        Ok(())
    });
    let ok = f1.is_ok() && ece_result.is_ok();
    report(2, "metric oracles", ok, &format!("1000 Macro-F1 cases: {f1:?}; 1000 ECE cases: {ece_result:?}"));
}

// ---------------------------------------------------------------- 3

fn fd_relative_error(params: &ClassifierParams, batch: &[TrainExample]) -> f64 {
    let eps = 1e-4;
    let analytic = loss_gradient(params, batch).unwrap().1.to_dense(params);
    let mut worst: f64 = 0.0;
    for k in 0..params.parameter_count() {
        let (mut plus, mut minus) = (params.clone(), params.clone());
        *plus.value_mut(k) += eps;
        *minus.value_mut(k) -= eps;
        let numeric = (batch_loss(&plus, batch).unwrap() - batch_loss(&minus, batch).unwrap()) / (2.0 * eps);
        let scale = numeric.abs().max(analytic[k].abs());
        if scale > 1e-7 {
            worst = worst.max((numeric - analytic[k]).abs() / scale);
        }
    }
    worst
}

#[test]
fn criterion_3_gradients() {
    let batch: Vec<TrainExample> = (0..6)
        .map(|i| {
            let dense: Vec<f64> = (0..5).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.25).collect();
            let target = if i % 2 == 0 {
                LabelDistribution::one_hot(i % 3, 3)
            } else {
                LabelDistribution::new(vec![0.1, 0.3, 0.6]).unwrap()
            };
            TrainExample { features: FeatureVector::from_dense(&dense).unwrap(), target, weight: 0.5 + 0.1 * i as f64 }
        })
        .collect();
    let mut linear = init_params(5, 0, 3, 11).unwrap();
    linear.input_bias.iter_mut().enumerate().for_each(|(k, b)| *b = 0.1 * k as f64 - 0.1);
    let mut hidden = init_params(5, 4, 3, 11).unwrap();
    hidden.input_bias.iter_mut().chain(hidden.output_bias.iter_mut()).enumerate().for_each(|(k, b)| *b = 0.1 * k as f64 - 0.15);
    let (l, h) = (fd_relative_error(&linear, &batch), fd_relative_error(&hidden, &batch));
    report(3, "gradients", l < 1e-4 && h < 1e-4, &format!("max relative error linear {l:.2e}, hidden {h:.2e}"));
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_4_strategy_identity() {
    let mut failures = Vec::new();
    let mut checked = 0;
    for hidden in [0, 6] {
        for seed in [1u64, 9] {
            let task = ClusterSpec::new(3, seed).task(4, 24, 6, 6).unwrap();
            let profile = OracleProfile::uniform(0.8, 3, seed).unwrap();
            let labels =
                annotate_simulated(task.unlabeled.iter().map(|p| (p.id.as_str(), p.gold)), &profile, &task.active_classes)
                    .unwrap();
            let settings = |id: StrategyId| {
                let train = TrainConfig { learning_rate: 0.05, batch_size: 8, epochs: 3, ..TrainConfig::default() };
                let model = crisis_ssl::core::strategies::ModelConfig { hidden_dim: hidden, dropout_rate: 0.2 };
                RunSettings::new(model, train, crisis_ssl::core::strategies::StrategyConfig::for_strategy(id), seed)
            };
            let base = run_supervised(&task, &settings(StrategyId::Supervised)).unwrap().params;
            for id in StrategyId::ALL {
                let mut variants = vec![("R=0", settings(id))];
                variants[0].1.strategy.rounds = 0;
                let mut empty = settings(id);
                match id {
                    StrategyId::SelfTrain => empty.strategy.threshold = 1.0,
                    StrategyId::Ust => empty.strategy.accept_fraction = 0.0,
                    _ => {}
                }
                if matches!(id, StrategyId::SelfTrain | StrategyId::Ust) {
                    variants.push(("empty acceptance", empty));
                }
                for (what, s) in variants {
                    checked += 1;
                    if run_strategy(&task, &s, Some(&labels)).unwrap().params != base {
                        failures.push(format!("{} {what} hidden={hidden} seed={seed}", id.key()));
                    }
                }
            }
        }
    }
    report(4, "strategy identity", failures.is_empty(), &format!("{checked} configurations; mismatches {failures:?}"));
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_5_aum_separation() {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let spec = ClusterSpec::new(4, seed);
        let points = spec.points(125).unwrap();
        // Every tenth point gets a different class, rotated by a seed-dependent offset.
        let noisy: HashSet<usize> = (0..points.len()).filter(|i| (i + seed as usize) % 10 == 0).collect();
        let labels: Vec<usize> = points
            .iter()
            .enumerate()
            .map(|(i, (_, c))| if noisy.contains(&i) { (c + 1 + (i / 10) % 3) % 4 } else { *c })
            .collect();
        let ids: Vec<String> = (0..points.len()).map(|i| format!("p{i}")).collect();
        let pseudo: Vec<(&str, &FeatureVector, usize)> =
            points.iter().zip(&labels).zip(&ids).map(|(((x, _), &l), id)| (id.as_str(), x, l)).collect();
        let init = init_params(spec.dim, 0, 4, seed).unwrap();
        let train = TrainConfig { learning_rate: 0.05, batch_size: 16, epochs: 5, seed, ..TrainConfig::default() };
        let records = aum_records(&init, &[], &pseudo, &train).unwrap();
        let stats = |noisy_side: bool| {
            let v: Vec<f64> = records.iter().filter(|r| noisy.contains(&r.index) == noisy_side).map(|r| r.aum).collect();
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0), n)
        };
        let ((mc, vc, nc), (mn, vn, nn)) = (stats(false), stats(true));
        let se = (vc / nc + vn / nn).sqrt();
        ok &= mc - mn > 3.0 * se;
        lines.push(format!("seed {seed}: gap {:.3} vs 3SE {:.3}", mc - mn, 3.0 * se));
    }
    report(5, "AUM separation", ok, &lines.join("; "));
}

// ---------------------------------------------------------------- 6, 7, 8

const CORPUS_SEED: u64 = 42;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn bench_config(out: &Path, budgets: Vec<usize>, methods: Vec<Method>) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        events: vec![EventConfig {
            name: "kerala-like".into(),
            path: None,
            synthetic: Some(SyntheticEvent { seed: CORPUS_SEED, ..Default::default() }),
        }],
        budgets,
        seeds: SEEDS.to_vec(),
        methods,
        output_dir: out.to_path_buf(),
        ..Default::default()
    };
    c.featurizer = FeaturizerConfig { dim: 1 << 14, ngram_orders: vec![1], ..FeaturizerConfig::default() };
    c
}

fn mean_f1(results: &[RunResult], method: Method, budget: usize) -> f64 {
    let v: Vec<f64> = results
        .iter()
        .filter(|r| r.key.method == method && r.key.budget == budget)
        .map(|r| r.record.test.as_ref().expect("test metrics").macro_f1)
        .collect();
    assert_eq!(v.len(), SEEDS.len(), "{method} at {budget}");
    v.iter().sum::<f64>() / v.len() as f64
}

/// Every strategy at 5 and 50 labels per class, run once and shared by criteria 6 and 7.
fn strategy_grid() -> &'static Vec<RunResult> {
    static GRID: OnceLock<Vec<RunResult>> = OnceLock::new();
    GRID.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let methods = StrategyId::ALL.into_iter().map(Method::Strategy).collect();
        let summary = run_experiment(&bench_config(dir.path(), vec![5, 50], methods)).unwrap();
        assert!(summary.failures.is_empty(), "{:?}", summary.failures);
        summary.results
    })
}

fn means_at(budget: usize) -> BTreeMap<StrategyId, f64> {
    StrategyId::ALL.into_iter().map(|s| (s, mean_f1(strategy_grid(), Method::Strategy(s), budget))).collect()
}

fn table(means: &BTreeMap<StrategyId, f64>) -> String {
    means.iter().map(|(s, v)| format!("{}={v:.3}", s.key())).collect::<Vec<_>>().join(" ")
}

#[test]
fn criterion_6_directional_benchmark() {
    let (m5, m50) = (means_at(5), means_at(50));
    println!("5 lb/cl: {}", table(&m5));
    println!("50 lb/cl: {}", table(&m50));
    let lg5 = m5[&StrategyId::LgCotrain];
    let sup5 = m5[&StrategyId::Supervised];
    let (best_id, best) = m5
        .iter()
        .filter(|(s, _)| !s.needs_oracle_labels())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(s, v)| (*s, *v))
        .unwrap();
    let a = lg5 >= sup5 + 0.10;
    let b = lg5 >= best;
    let gap5 = lg5 - m5[&StrategyId::SelfTrain];
    let gap50 = m50[&StrategyId::LgCotrain] - m50[&StrategyId::SelfTrain];
    let c = m50[&StrategyId::SelfTrain] >= m50[&StrategyId::Supervised] && gap50 < gap5;
    report(
        6,
        "directional benchmark",
        a && b && c,
        &format!(
            "(a) LG {lg5:.3} vs supervised {sup5:.3} + 0.10 [{}]; (b) best non-LLM {} {best:.3} [{}]; \
             (c) ST {:.3} vs supervised {:.3} at 50, LG-ST gap {gap5:.3} -> {gap50:.3} [{}]",
            pf(a),
            best_id.key(),
            pf(b),
            m50[&StrategyId::SelfTrain],
            m50[&StrategyId::Supervised],
            pf(c)
        ),
    );
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Accuracy of the supervised teacher on D_U at 5 labels per class, mean over seeds.
fn teacher_accuracy(config: &ExperimentConfig) -> f64 {
    let spec = config.events[0].synthetic.as_ref().unwrap().spec("kerala-like");
    let corpus = generate_topic_corpus(&spec, &humaid_schema()).unwrap();
    let mut total = 0.0;
    for seed in SEEDS {
        let plan = make_split_plan(&corpus, 5, seed).unwrap();
        let task = SslTask::from_split(&corpus, &plan, &config.featurizer).unwrap();
        let settings = RunSettings::new(
            config.model.clone(),
            config.train.clone(),
            config.strategy_config(StrategyId::Supervised),
            seed,
        );
        let params = run_supervised(&task, &settings).unwrap().params;
        let hits = task.unlabeled.iter().filter(|p| Some(predict(&params, &p.features).unwrap().0) == p.gold).count();
        total += hits as f64 / task.unlabeled.len() as f64;
    }
    total / SEEDS.len() as f64
}

#[test]
fn criterion_7_ablation_direction() {
    let grid = strategy_grid();
    let lg = Method::Strategy(StrategyId::LgCotrain);
    let oracle: Vec<f64> = grid
        .iter()
        .filter(|r| r.key.method == lg && r.key.budget == 5)
        .map(|r| r.oracle.as_ref().unwrap().accuracy)
        .collect();
    let oracle_acc = oracle.iter().sum::<f64>() / oracle.len() as f64;
    let teacher_acc = teacher_accuracy(&bench_config(Path::new("unused"), vec![5], vec![]));
    let precondition = oracle_acc - teacher_acc >= 0.2;
    let m5 = means_at(5);
    let delta = m5[&StrategyId::LgCotrain] - m5[&StrategyId::SgCotrain];
    report(
        7,
        "ablation direction",
        precondition && delta >= 0.08,
        &format!(
            "oracle acc {oracle_acc:.3} vs teacher acc {teacher_acc:.3} (margin >= 0.2 [{}]); LG - SG = {delta:.3} (>= 0.08 [{}])",
            pf(precondition),
            pf(delta >= 0.08)
        ),
    );
}

#[test]
fn criterion_8_oracle_monotonicity() {
    let lg = Method::Strategy(StrategyId::LgCotrain);
    let levels = [0.3, 0.5, 0.7, 0.9, 1.0];
    let means: Vec<f64> = levels
        .iter()
        .map(|&acc| {
            let dir = tempfile::tempdir().unwrap();
            let mut config = bench_config(dir.path(), vec![5], vec![lg]);
            config.oracle.accuracy = Some(acc);
            let summary = run_experiment(&config).unwrap();
            assert!(summary.failures.is_empty(), "{:?}", summary.failures);
            mean_f1(&summary.results, lg, 5)
        })
        .collect();
    let drops: Vec<f64> = means.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
    let ok = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.01);
    let curve: Vec<String> = levels.iter().zip(&means).map(|(a, m)| format!("{a}:{m:.3}")).collect();
    report(8, "oracle monotonicity", ok, &format!("LG Macro-F1 by oracle accuracy {}; drops {drops:?}", curve.join(" ")));
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_remote_conformance() {
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("cache.jsonl");
    let responder = |t: &str| if t.starts_with("flood") { "Infrastructure and utility damage".into() } else { "no idea".into() };
    let request = |server: &MockServer, texts: &[&str]| AnnotationRequest {
        settings: RemoteSettings {
            endpoint: server.url(),
            rate_limit: 0.0,
            backoff_base_ms: 30,
            token_env: "CRISIS_SSL_ACCEPTANCE_UNSET".into(),
            ..RemoteSettings::default()
        },
        template: PromptTemplate::humaid_default(),
        schema: humaid_schema(),
        batch: texts.iter().enumerate().map(|(i, t)| (format!("i{i}"), t.to_string())).collect(),
    };

    let server = MockServer::start(MockBehavior::from_fn(responder)).unwrap();
    let texts = ["flood took the bridge", "lunch time", "flood took the bridge"];
    let mut cache = AnnotationCache::open(&cache_path).unwrap();
    let first = annotate_remote(&request(&server, &texts), &mut cache).unwrap();
    let after_first = server.request_count();
    let mut cache = AnnotationCache::open(&cache_path).unwrap();
    let second = annotate_remote(&request(&server, &texts), &mut cache).unwrap();
    let no_duplicates = after_first == 2 && server.request_count() == 2 && second.cache_hits == 3;
    let infra = humaid_schema().index_of("Infrastructure and utility damage").unwrap();
    let oos = first.labels[0].class() == Some(infra)
        && first.labels[1].is_oos()
        && first.labels[1].raw_response.as_deref() == Some("no idea")
        && first.labels == second.labels;

    let flaky = MockServer::start(MockBehavior::from_fn(responder).failing_first(2, 503)).unwrap();
    let mut cache = AnnotationCache::open(&dir.path().join("flaky.jsonl")).unwrap();
    let out = annotate_remote(&request(&flaky, &["flood again"]), &mut cache).unwrap();
    let log = flaky.requests();
    let statuses: Vec<u16> = log.iter().map(|r| r.status).collect();
    let retry = statuses == [503, 503, 200]
        && log[1].at - log[0].at >= Duration::from_millis(30)
        && log[2].at - log[1].at >= Duration::from_millis(60)
        && out.labels[0].class() == Some(infra);
    report(
        9,
        "remote conformance",
        no_duplicates && oos && retry,
        &format!(
            "no duplicate requests [{}] ({} requests for 3 items twice); OOS flagging [{}]; retry with backoff [{}] statuses {statuses:?}",
            pf(no_duplicates),
            server.request_count(),
            pf(oos),
            pf(retry)
        ),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_grid_determinism() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig {
            events: ["a", "b"]
                .iter()
                .enumerate()
                .map(|(i, name)| EventConfig {
                    name: name.to_string(),
                    path: None,
                    synthetic: Some(SyntheticEvent { seed: i as u64, train: 600, val: 100, test: 200, ..Default::default() }),
                })
                .collect(),
            budgets: vec![5, 10],
            seeds: vec![0, 1],
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        config.featurizer = FeaturizerConfig { dim: 1 << 12, ngram_orders: vec![1], ..FeaturizerConfig::default() };
        config.train.epochs = 4;
        let summary = run_experiment(&config).unwrap();
        assert!(summary.failures.is_empty(), "{:?}", summary.failures);
        (summary.results.len(), aggregate(&summary.results))
    };
    let ((n1, t1), (n2, t2)) = (run(), run());
    let ok = n1 == n2 && t1 == t2 && t1.to_json() == t2.to_json();
    report(10, "grid determinism", ok, &format!("{n1} runs per grid, {} methods; tables identical: {ok}", t1.methods.len()));
}
