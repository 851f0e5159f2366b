//! VerifyMatch: LLM pseudo-labels are accepted when the classifier agrees
//! strongly enough, the rest enter training only through low-weight MixUp.

use alloc::format;
use alloc::vec::Vec;

use super::ops::{mixup, pick, sample_mix_lambda};
use super::{check_oracle_alignment, fit, pseudo_example, supervised_params, Ledger, RunOutcome, RunSettings, SslTask};
use crate::error::Result;
use crate::model::{forward, ClassifierParams, LabelDistribution, TrainExample};
use crate::oracle::{PseudoClass, PseudoLabel};
use crate::seed::{self, streams};

/// Mean max-probability over the labeled examples the model classifies
/// correctly; over all labeled examples when none is correct.
pub fn verification_threshold(params: &ClassifierParams, task: &SslTask) -> Result<f64> {
    let (mut hit_sum, mut hits, mut all_sum) = (0.0, 0usize, 0.0);
    for p in &task.labeled {
        let (_, probs) = forward(params, &p.features)?;
        let top = probs.max();
        all_sum += top;
        if probs.argmax() == p.label {
            hit_sum += top;
            hits += 1;
        }
    }
    Ok(if hits > 0 { hit_sum / hits as f64 } else { all_sum / task.labeled.len().max(1) as f64 })
}

/// Whether each oracle label is verified: in schema and assigned at least
/// `threshold` probability by the classifier.
pub fn verify_pseudo_labels(
    params: &ClassifierParams,
    task: &SslTask,
    labels: &[PseudoLabel],
    threshold: f64,
) -> Result<Vec<bool>> {
    task.unlabeled
        .iter()
        .zip(labels)
        .map(|(p, l)| match l.label {
            PseudoClass::OutOfSchema => Ok(false),
            PseudoClass::Class(c) => Ok(forward(params, &p.features)?.1.probs()[c] >= threshold),
        })
        .collect()
}

pub fn run_verify_match(task: &SslTask, labels: &[PseudoLabel], settings: &RunSettings) -> Result<RunOutcome> {
    check_oracle_alignment(task, labels)?;
    let cfg = &settings.strategy;
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    if labels.iter().all(PseudoLabel::is_oos) {
        ledger.notes.push("every oracle label is out of schema; falling back to supervised".into());
        return ledger.finish(task, settings, params);
    }
    let labeled = task.labeled_examples();
    for round in 1..=cfg.rounds {
        let threshold = verification_threshold(&params, task)?;
        let verified = verify_pseudo_labels(&params, task, labels, threshold)?;
        let decisions: Vec<(PseudoClass, bool)> = labels.iter().zip(&verified).map(|(l, &v)| (l.label, v)).collect();
        ledger.record_round(task, round, &decisions);
        ledger.notes.push(format!("round {round}: verification threshold {threshold:.4}"));
        let mut rng = seed::rng(seed::derive(seed::derive(settings.seed, streams::MIXUP), round as u64));
        let mut pool = labeled.clone();
        for (j, l) in labels.iter().enumerate() {
            let PseudoClass::Class(c) = l.label else { continue };
            if verified[j] {
                pool.push(pseudo_example(task, j, c, 1.0));
            } else if cfg.low_weight > 0.0 {
                let partner = &labeled[pick(labeled.len(), &mut rng)];
                let lambda = sample_mix_lambda(cfg.mixup_alpha, &mut rng)?;
                let own = LabelDistribution::one_hot(c, task.class_count);
                let (features, target) =
                    mixup((&task.unlabeled[j].features, &own), (&partner.features, &partner.target), lambda)?;
                pool.push(TrainExample { features, target, weight: cfg.low_weight });
            }
        }
        params = fit(task, settings, &pool, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}
