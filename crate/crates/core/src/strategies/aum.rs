//! Self-training filtered by area under the margin (AUM) of a probe model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ops::{mixup, pick, sample_mix_lambda};
use super::{fit, pseudo_example, supervised_params, Ledger, RunOutcome, RunSettings, SslTask};
use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::model::{forward, init_params, margin, train_with, ClassifierParams, LabelDistribution, TrainConfig, TrainExample};
use crate::oracle::{annotate_teacher, PseudoClass};
use crate::seed::{self, streams};

/// Margin history of one pseudo-labeled example during probe training.
#[derive(Debug, Clone, PartialEq)]
pub struct AumRecord {
    pub index: usize,
    pub example_id: String,
    pub class: usize,
    /// Assigned-class logit minus the largest other logit, after each epoch.
    pub margins: Vec<f64>,
    /// Mean of `margins`.
    pub aum: f64,
}

/// Train `init` on `labeled` plus the hard `pseudo` labels, recording each
/// pseudo example's margin after every epoch.
pub fn aum_records(
    init: &ClassifierParams,
    labeled: &[TrainExample],
    pseudo: &[(&str, &FeatureVector, usize)],
    train: &TrainConfig,
) -> Result<Vec<AumRecord>> {
    if train.epochs < 2 {
        return Err(CoreError::InvalidConfig("AUM needs at least two training epochs".into()));
    }
    let class_count = init.class_count;
    let mut pool: Vec<TrainExample> = labeled.to_vec();
    pool.extend(pseudo.iter().map(|&(_, x, c)| TrainExample::hard(x.clone(), c, class_count)));
    let mut margins: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(train.epochs); pseudo.len()];
    train_with(init, &pool, train, |_, params| {
        for (history, &(_, x, c)) in margins.iter_mut().zip(pseudo) {
            let (logits, _) = forward(params, x)?;
            history.push(margin(&logits, c)?);
        }
        Ok(())
    })?;
    Ok(margins
        .into_iter()
        .zip(pseudo)
        .enumerate()
        .map(|(index, (margins, &(id, _, class)))| {
            let aum = margins.iter().sum::<f64>() / margins.len() as f64;
            AumRecord { index, example_id: id.into(), class, margins, aum }
        })
        .collect())
}

/// Indices of the `ceil(n · percentile / 100)` highest-AUM records (lower index
/// wins ties), ascending.
pub(crate) fn keep_by_aum(records: &[AumRecord], percentile: f64) -> Vec<usize> {
    let keep = libm::ceil(records.len() as f64 * percentile / 100.0) as usize;
    let mut order: Vec<&AumRecord> = records.iter().collect();
    order.sort_by(|a, b| b.aum.total_cmp(&a.aum).then(a.index.cmp(&b.index)));
    let mut kept: Vec<usize> = order.iter().take(keep).map(|r| r.index).collect();
    kept.sort_unstable();
    kept
}

pub fn run_aum_st(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    run_aum(task, settings, false)
}

/// AUM-ST whose kept pseudo-labels are also mixed with random labeled examples.
pub fn run_aum_st_mixup(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    run_aum(task, settings, true)
}

fn run_aum(task: &SslTask, settings: &RunSettings, with_mixup: bool) -> Result<RunOutcome> {
    if settings.train.epochs < 2 && settings.strategy.rounds > 0 {
        return Err(CoreError::InvalidConfig("AUM needs at least two training epochs".into()));
    }
    let cfg = &settings.strategy;
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    let labeled = task.labeled_examples();
    for round in 1..=cfg.rounds {
        let labels = annotate_teacher(&params, task.unlabeled_refs())?;
        let pseudo: Vec<(&str, &FeatureVector, usize)> = task
            .unlabeled
            .iter()
            .zip(&labels)
            .map(|(p, l)| (p.id.as_str(), &p.features, l.class().expect("teacher labels are in schema")))
            .collect();
        let probe_seed = seed::derive(seed::derive(settings.seed, streams::PROBE), round as u64);
        let init = init_params(task.input_dim, settings.model.hidden_dim, task.class_count, probe_seed)?
            .with_dropout(settings.model.dropout_rate)?;
        let probe_train = TrainConfig { seed: probe_seed, ..settings.train.clone() };
        let records = aum_records(&init, &labeled, &pseudo, &probe_train)?;
        let kept = keep_by_aum(&records, cfg.aum_keep_percentile);
        let mut decisions: Vec<(PseudoClass, bool)> = labels.iter().map(|l| (l.label, false)).collect();
        for &j in &kept {
            decisions[j].1 = true;
        }
        ledger.record_round(task, round, &decisions);
        if kept.is_empty() {
            ledger.notes.push(format!("round {round}: nothing kept; stopping"));
            break;
        }
        let mut pool = labeled.clone();
        pool.extend(kept.iter().map(|&j| pseudo_example(task, j, pseudo[j].2, 1.0)));
        if with_mixup {
            let mut rng = seed::rng(seed::derive(seed::derive(settings.seed, streams::MIXUP), round as u64));
            for &j in &kept {
                let partner = &labeled[pick(labeled.len(), &mut rng)];
                let lambda = sample_mix_lambda(cfg.mixup_alpha, &mut rng)?;
                let target = LabelDistribution::one_hot(pseudo[j].2, task.class_count);
                let (features, target) =
                    mixup((pseudo[j].1, &target), (&partner.features, &partner.target), lambda)?;
                pool.push(TrainExample { features, target, weight: 1.0 });
            }
        }
        params = fit(task, settings, &pool, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}
