//! Classical self-training and its uncertainty-aware variant.

use alloc::format;
use alloc::vec::Vec;

use super::{fit, pseudo_example, supervised_params, Ledger, RunOutcome, RunSettings, SslTask};
use crate::error::{CoreError, Result};
use crate::model::mc_dropout_predict;
use crate::oracle::{annotate_teacher, PseudoClass};
use crate::seed::{self, streams};

/// Teacher relabels D_U each round; predictions with confidence ≥ threshold
/// join the pool as hard labels.
pub fn run_self_train(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    let threshold = settings.strategy.threshold;
    for round in 1..=settings.strategy.rounds {
        let labels = annotate_teacher(&params, task.unlabeled_refs())?;
        let decisions: Vec<(PseudoClass, bool)> =
            labels.iter().map(|l| (l.label, l.confidence >= threshold)).collect();
        ledger.record_round(task, round, &decisions);
        let mut pool = task.labeled_examples();
        for (j, l) in labels.iter().enumerate() {
            if let (PseudoClass::Class(c), true) = (l.label, decisions[j].1) {
                pool.push(pseudo_example(task, j, c, 1.0));
            }
        }
        if pool.len() == task.labeled.len() {
            ledger.notes.push(format!("round {round}: no pseudo-label reached the threshold; stopping"));
            break;
        }
        params = fit(task, settings, &pool, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}

/// One D_U item scored by MC dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCandidate {
    pub index: usize,
    pub class: usize,
    pub confidence: f64,
    /// Sample variance of the predicted class probability.
    pub uncertainty: f64,
}

/// Per predicted class, the `ceil(fraction · n_c)` candidates with the lowest
/// uncertainty (higher confidence, then lower index, breaks ties). Returns
/// accepted indices in ascending order.
pub fn rank_for_acceptance(candidates: &[UncertaintyCandidate], fraction: f64) -> Vec<usize> {
    let mut classes: Vec<usize> = candidates.iter().map(|c| c.class).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut accepted = Vec::new();
    for class in classes {
        let mut group: Vec<&UncertaintyCandidate> = candidates.iter().filter(|c| c.class == class).collect();
        group.sort_by(|a, b| {
            a.uncertainty
                .total_cmp(&b.uncertainty)
                .then(b.confidence.total_cmp(&a.confidence))
                .then(a.index.cmp(&b.index))
        });
        let take = libm::ceil(fraction * group.len() as f64) as usize;
        accepted.extend(group.iter().take(take).map(|c| c.index));
    }
    accepted.sort_unstable();
    accepted
}

/// MC-dropout scoring of every D_U item under `params`.
pub(crate) fn score_uncertainty(
    task: &SslTask,
    params: &crate::model::ClassifierParams,
    samples: usize,
    seed: u64,
) -> Result<Vec<UncertaintyCandidate>> {
    task.unlabeled
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let (mean, var) = mc_dropout_predict(params, &p.features, samples, seed::derive(seed, j as u64))?;
            let class = mean.argmax();
            Ok(UncertaintyCandidate { index: j, class, confidence: mean.probs()[class], uncertainty: var[class] })
        })
        .collect()
}

/// Self-training that accepts the least uncertain pseudo-labels per class and
/// weights each by `1 − uncertainty / max uncertainty`.
pub fn run_ust(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    if settings.model.dropout_rate <= 0.0 {
        return Err(CoreError::Unsupported("UST needs a positive dropout rate for MC dropout".into()));
    }
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    let stream = seed::derive(settings.seed, streams::UNCERTAINTY);
    for round in 1..=settings.strategy.rounds {
        let round_seed = seed::derive(stream, round as u64);
        let candidates = score_uncertainty(task, &params, settings.strategy.uncertainty_samples, round_seed)?;
        let accepted = rank_for_acceptance(&candidates, settings.strategy.accept_fraction);
        let mut decisions: Vec<(PseudoClass, bool)> =
            candidates.iter().map(|c| (PseudoClass::Class(c.class), false)).collect();
        for &j in &accepted {
            decisions[j].1 = true;
        }
        ledger.record_round(task, round, &decisions);
        let max_u = candidates.iter().map(|c| c.uncertainty).fold(0.0, f64::max);
        let mut pool = task.labeled_examples();
        for &j in &accepted {
            let c = &candidates[j];
            let weight = if max_u > 0.0 { 1.0 - c.uncertainty / max_u } else { 1.0 };
            pool.push(pseudo_example(task, j, c.class, weight));
        }
        if accepted.is_empty() {
            ledger.notes.push(format!("round {round}: nothing accepted; stopping"));
            break;
        }
        params = fit(task, settings, &pool, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}
