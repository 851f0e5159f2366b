//! Self-training that splits pseudo-labels by confidence gap and trains on
//! MixUp pairs across the labeled, high-gap and low-gap pools.

use alloc::vec::Vec;

use super::ops::{confidence_gap, mixup, pick, sample_mix_lambda};
use super::{fit, supervised_params, Ledger, RunOutcome, RunSettings, SslTask};
use crate::error::Result;
use crate::model::{forward, ClassifierParams, LabelDistribution, TrainExample};
use crate::oracle::PseudoClass;
use crate::seed::{self, streams};

/// Teacher pseudo-labels for D_U split into (high, low) index lists by
/// whether the top-two probability gap reaches `threshold`. Also returns
/// the predicted class of every item.
pub fn partition_by_gap(
    params: &ClassifierParams,
    task: &SslTask,
    threshold: f64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (mut high, mut low, mut classes) = (Vec::new(), Vec::new(), Vec::with_capacity(task.unlabeled.len()));
    for (j, p) in task.unlabeled.iter().enumerate() {
        let (_, probs) = forward(params, &p.features)?;
        classes.push(probs.argmax());
        if confidence_gap(&probs)? >= threshold {
            high.push(j);
        } else {
            low.push(j);
        }
    }
    Ok((high, low, classes))
}

/// Mixed pairs: labeled×high at weight 1, labeled×low and high×low at the low
/// weight. The pseudo-labeled operand always dominates the mix.
pub fn run_conf_st_mixup(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    let cfg = &settings.strategy;
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    let labeled = task.labeled_examples();
    for round in 1..=cfg.rounds {
        let (high, low, classes) = partition_by_gap(&params, task, cfg.threshold)?;
        let mut decisions: Vec<(PseudoClass, bool)> = classes.iter().map(|&c| (PseudoClass::Class(c), false)).collect();
        for &j in &high {
            decisions[j].1 = true;
        }
        ledger.record_round(task, round, &decisions);
        let mut rng = seed::rng(seed::derive(seed::derive(settings.seed, streams::MIXUP), round as u64));
        let target = |j: usize| LabelDistribution::one_hot(classes[j], task.class_count);
        let mut pool = labeled.clone();
        let mut push_mix = |j: usize, partner: (&crate::features::FeatureVector, &LabelDistribution), weight: f64,
                            rng: &mut rand_chacha::ChaCha8Rng|
         -> Result<()> {
            let lambda = sample_mix_lambda(cfg.mixup_alpha, rng)?;
            let own = target(j);
            let (features, target) = mixup((&task.unlabeled[j].features, &own), partner, lambda)?;
            pool.push(TrainExample { features, target, weight });
            Ok(())
        };
        for &j in &high {
            let l = &labeled[pick(labeled.len(), &mut rng)];
            push_mix(j, (&l.features, &l.target), 1.0, &mut rng)?;
        }
        for &j in &low {
            let l = &labeled[pick(labeled.len(), &mut rng)];
            push_mix(j, (&l.features, &l.target), cfg.low_weight, &mut rng)?;
            if !high.is_empty() {
                let h = high[pick(high.len(), &mut rng)];
                push_mix(j, (&task.unlabeled[h].features, &target(h)), cfg.low_weight, &mut rng)?;
            }
        }
        params = fit(task, settings, &pool, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}
