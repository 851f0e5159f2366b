//! MixMatch: sharpened label guesses over augmentations, then MixUp across
//! the labeled and unlabeled pools.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ops::{mixup, sample_mix_lambda, sharpen};
use super::{fit, supervised_params, Ledger, RunOutcome, RunSettings, SslTask};
use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::model::{forward, ClassifierParams, LabelDistribution, TrainExample};
use crate::oracle::PseudoClass;
use crate::seed::{self, streams};

/// Random feature dropout with inverted scaling.
fn augment(x: &FeatureVector, drop_rate: f64, rng: &mut ChaCha8Rng) -> FeatureVector {
    if drop_rate == 0.0 {
        return x.clone();
    }
    let scale = 1.0 / (1.0 - drop_rate);
    let kept: Vec<(u32, f64)> =
        x.entries().iter().filter(|_| rng.random::<f64>() >= drop_rate).map(|&(i, v)| (i, v * scale)).collect();
    FeatureVector::from_pairs(x.dim(), kept).expect("subset of a valid vector")
}

/// Average prediction over `passes` augmented copies of `x`, sharpened at `temperature`.
pub fn guess_soft_labels(
    params: &ClassifierParams,
    x: &FeatureVector,
    passes: usize,
    drop_rate: f64,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LabelDistribution> {
    if passes == 0 {
        return Err(CoreError::InvalidConfig("augment_passes must be at least 1".into()));
    }
    let mut total = alloc::vec![0.0; params.class_count];
    for _ in 0..passes {
        let (_, probs) = forward(params, &augment(x, drop_rate, rng))?;
        for (t, p) in total.iter_mut().zip(probs.probs()) {
            *t += p;
        }
    }
    let mean = LabelDistribution::from_weights(total.into_iter().map(|t| t / passes as f64).collect())?;
    sharpen(&mean, temperature)
}

pub fn run_mixmatch(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    let cfg = &settings.strategy;
    let mut params = supervised_params(task, settings)?;
    let mut ledger = Ledger::new();
    for round in 1..=cfg.rounds {
        let mut aug_rng = seed::rng(seed::derive(seed::derive(settings.seed, streams::AUGMENT), round as u64));
        let mut mix_rng = seed::rng(seed::derive(seed::derive(settings.seed, streams::MIXUP), round as u64));
        let mut set = task.labeled_examples();
        let mut decisions = Vec::with_capacity(task.unlabeled.len());
        for p in &task.unlabeled {
            let guess = guess_soft_labels(
                &params,
                &p.features,
                cfg.augment_passes,
                cfg.augment_drop_rate,
                cfg.sharpen_temperature,
                &mut aug_rng,
            )?;
            decisions.push((PseudoClass::Class(guess.argmax()), cfg.low_weight > 0.0));
            set.push(TrainExample { features: p.features.clone(), target: guess, weight: cfg.low_weight });
        }
        ledger.record_round(task, round, &decisions);
        let mut partners: Vec<usize> = (0..set.len()).collect();
        partners.shuffle(&mut mix_rng);
        let mut mixed = Vec::with_capacity(set.len());
        for (i, &k) in partners.iter().enumerate() {
            let lambda = sample_mix_lambda(cfg.mixup_alpha, &mut mix_rng)?;
            let (a, b) = (&set[i], &set[k]);
            let (features, target) = mixup((&a.features, &a.target), (&b.features, &b.target), lambda)?;
            mixed.push(TrainExample { features, target, weight: a.weight });
        }
        params = fit(task, settings, &mixed, settings.seed)?;
    }
    ledger.finish(task, settings, params)
}
