use crisis_ssl_core::metrics::MetricsReport;
use crisis_ssl_core::strategies::{RunRecord, StrategyConfig};

use crate::config::Method;
use crate::runner::{RunKey, RunResult};

/// A run result carrying only test Macro-F1 and ECE.
pub fn result(event: &str, budget: usize, method: Method, seed: u64, f1: f64, ece: f64) -> RunResult {
    let test = MetricsReport {
        macro_f1: f1,
        per_class_f1: vec![],
        active_classes: vec![],
        ece,
        bins: vec![],
        confusion: vec![],
        sample_count: 1,
    };
    RunResult {
        key: RunKey { event: event.into(), budget, method, seed },
        n_labeled: 0,
        n_unlabeled: 0,
        oracle: None,
        record: RunRecord {
            config: StrategyConfig::default(),
            seed,
            rounds: vec![],
            val: None,
            test: Some(test),
            wall_time_secs: 0.0,
            notes: vec![],
        },
    }
}
