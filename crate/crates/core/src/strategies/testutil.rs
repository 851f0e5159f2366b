use alloc::vec::Vec;

use super::{ModelConfig, RunSettings, SslTask, StrategyConfig, StrategyId};
use crate::model::{ClassifierParams, Optimizer, TrainConfig};
use crate::oracle::{annotate_simulated, OracleProfile, PseudoLabel};
use crate::synthetic::ClusterSpec;

pub fn cluster_task(classes: usize, labeled: usize, unlabeled: usize, seed: u64) -> SslTask {
    ClusterSpec::new(classes, seed).task(labeled, unlabeled, 10, 20).unwrap()
}

pub fn settings(strategy: StrategyId, seed: u64) -> RunSettings {
    let train = TrainConfig {
        learning_rate: 0.05,
        batch_size: 16,
        epochs: 6,
        weight_decay: 0.0,
        seed: 0,
        optimizer: Optimizer::Adam,
    };
    RunSettings::new(
        ModelConfig { hidden_dim: 0, dropout_rate: 0.2 },
        train,
        StrategyConfig::for_strategy(strategy),
        seed,
    )
}

pub fn simulated_labels(task: &SslTask, accuracy: f64, seed: u64) -> Vec<PseudoLabel> {
    let profile = OracleProfile::uniform(accuracy, task.class_count, seed).unwrap();
    annotate_simulated(task.unlabeled.iter().map(|p| (p.id.as_str(), p.gold)), &profile, &task.active_classes).unwrap()
}

pub fn test_f1(params: &ClassifierParams, task: &SslTask) -> f64 {
    super::evaluate(params, &task.test, task, 10).unwrap().unwrap().macro_f1
}
