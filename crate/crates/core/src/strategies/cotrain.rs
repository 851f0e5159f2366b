//! Co-training of two differently seeded classifiers around a fixed set of
//! pseudo-labels. Each model vouches for the pseudo-labels it agrees with,
//! and those examples train its peer at full weight.

use alloc::vec::Vec;

use super::{
    check_oracle_alignment, fit, pseudo_example, supervised_params, val_macro_f1, Ledger, RunOutcome, RunSettings,
    SslTask,
};
use crate::error::Result;
use crate::model::{predict, ClassifierParams, TrainExample};
use crate::oracle::{annotate_teacher, PseudoClass, PseudoLabel};
use crate::seed::{self, streams};

/// Co-training guided by external (LLM) pseudo-labels.
pub fn run_lg_cotrain(task: &SslTask, labels: &[PseudoLabel], settings: &RunSettings) -> Result<RunOutcome> {
    check_oracle_alignment(task, labels)?;
    let base = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    if labels.iter().all(PseudoLabel::is_oos) {
        ledger.notes.push("every oracle label is out of schema; falling back to supervised".into());
        return ledger.finish(task, settings, base);
    }
    cotrain(task, labels, settings, base, ledger)
}

/// Same pipeline with the supervised model's own predictions as pseudo-labels.
pub fn run_sg_cotrain(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    let base = supervised_params(task, settings)?;
    let labels = annotate_teacher(&base, task.unlabeled_refs())?;
    cotrain(task, &labels, settings, base, Ledger::new())
}

fn agreement(params: &ClassifierParams, task: &SslTask, labels: &[PseudoLabel]) -> Result<Vec<bool>> {
    task.unlabeled
        .iter()
        .zip(labels)
        .map(|(p, l)| match l.label {
            PseudoClass::OutOfSchema => Ok(false),
            PseudoClass::Class(c) => Ok(predict(params, &p.features)?.0 == c),
        })
        .collect()
}

/// Pool for one model: D_L, pseudo-labels its peer agrees with at weight 1,
/// the remaining in-schema pseudo-labels at the low weight.
fn peer_pool(task: &SslTask, labels: &[PseudoLabel], peer_agrees: &[bool], low_weight: f64) -> Vec<TrainExample> {
    let mut pool = task.labeled_examples();
    for (j, l) in labels.iter().enumerate() {
        if let PseudoClass::Class(c) = l.label {
            let weight = if peer_agrees[j] { 1.0 } else { low_weight };
            pool.push(pseudo_example(task, j, c, weight));
        }
    }
    pool
}

fn cotrain(
    task: &SslTask,
    labels: &[PseudoLabel],
    settings: &RunSettings,
    base: ClassifierParams,
    mut ledger: Ledger,
) -> Result<RunOutcome> {
    let rounds = settings.strategy.rounds;
    if rounds == 0 {
        return ledger.finish(task, settings, base);
    }
    let seed_a = settings.seed;
    let seed_b = seed::derive(settings.seed, streams::PEER);
    let mut model_a = base;
    let mut model_b = fit(task, settings, &task.labeled_examples(), seed_b)?;
    for round in 1..=rounds {
        let agree_a = agreement(&model_a, task, labels)?;
        let agree_b = agreement(&model_b, task, labels)?;
        let decisions: Vec<(PseudoClass, bool)> =
            labels.iter().enumerate().map(|(j, l)| (l.label, agree_a[j] || agree_b[j])).collect();
        ledger.record_round(task, round, &decisions);
        let pool_a = peer_pool(task, labels, &agree_b, settings.strategy.low_weight);
        let pool_b = peer_pool(task, labels, &agree_a, settings.strategy.low_weight);
        model_a = fit(task, settings, &pool_a, seed_a)?;
        model_b = fit(task, settings, &pool_b, seed_b)?;
    }
    let score_a = val_macro_f1(&model_a, task)?;
    let score_b = val_macro_f1(&model_b, task)?;
    let pick_b = matches!((score_a, score_b), (Some(a), Some(b)) if b > a);
    if pick_b {
        ledger.notes.push("peer model selected on validation Macro-F1".into());
    }
    ledger.finish(task, settings, if pick_b { model_b } else { model_a })
}
