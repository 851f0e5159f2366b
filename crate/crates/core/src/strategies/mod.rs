//! Training strategies: supervised baselines, classical self-training
//! variants, MixUp-based methods and LLM-guided verification/co-training.
//!
//! Every strategy starts from the same supervised fit on the labeled pool and
//! then runs `rounds` rounds of pseudo-labeling. With zero rounds each one
//! returns the supervised model unchanged, and every model fit is a fresh
//! seeded initialization with best-validation-epoch selection.

mod aum;
mod conf_mixup;
mod cotrain;
mod mixmatch;
mod ops;
mod self_training;
mod verify;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{EventCorpus, SplitPlan};
use crate::error::{CoreError, Result};
use crate::features::{featurize_text, FeatureVector, FeaturizerConfig};
use crate::metrics::{MetricsReport, DEFAULT_BINS};
use crate::model::{forward, init_params, train_with, ClassifierParams, LabelDistribution, TrainConfig, TrainExample};
use crate::oracle::{PseudoClass, PseudoLabel};

pub use aum::{aum_records, run_aum_st, run_aum_st_mixup, AumRecord};
pub use conf_mixup::{partition_by_gap, run_conf_st_mixup};
pub use cotrain::{run_lg_cotrain, run_sg_cotrain};
pub use mixmatch::{guess_soft_labels, run_mixmatch};
pub use ops::{confidence_gap, mixup, sample_mix_lambda, sharpen};
pub use self_training::{rank_for_acceptance, run_self_train, run_ust, UncertaintyCandidate};
pub use verify::{run_verify_match, verification_threshold, verify_pseudo_labels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    Supervised,
    SelfTrain,
    Ust,
    Mixmatch,
    AumSt,
    ConfStMixup,
    AumStMixup,
    VerifyMatch,
    LgCotrain,
    SgCotrain,
}

impl StrategyId {
    pub const ALL: [StrategyId; 10] = [
        StrategyId::Supervised,
        StrategyId::SelfTrain,
        StrategyId::Ust,
        StrategyId::Mixmatch,
        StrategyId::AumSt,
        StrategyId::ConfStMixup,
        StrategyId::AumStMixup,
        StrategyId::VerifyMatch,
        StrategyId::LgCotrain,
        StrategyId::SgCotrain,
    ];

    /// Whether the strategy consumes externally supplied (LLM) pseudo-labels.
    pub fn needs_oracle_labels(self) -> bool {
        matches!(self, StrategyId::VerifyMatch | StrategyId::LgCotrain)
    }

    pub fn key(self) -> &'static str {
        match self {
            StrategyId::Supervised => "supervised",
            StrategyId::SelfTrain => "self_train",
            StrategyId::Ust => "ust",
            StrategyId::Mixmatch => "mixmatch",
            StrategyId::AumSt => "aum_st",
            StrategyId::ConfStMixup => "conf_st_mixup",
            StrategyId::AumStMixup => "aum_st_mixup",
            StrategyId::VerifyMatch => "verify_match",
            StrategyId::LgCotrain => "lg_cotrain",
            StrategyId::SgCotrain => "sg_cotrain",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            StrategyId::Supervised => "Supervised",
            StrategyId::SelfTrain => "ST",
            StrategyId::Ust => "UST",
            StrategyId::Mixmatch => "MixMatch",
            StrategyId::AumSt => "AUM-ST",
            StrategyId::ConfStMixup => "Conf-ST-MixUp",
            StrategyId::AumStMixup => "AUM-ST-MixUp",
            StrategyId::VerifyMatch => "VerifyMatch",
            StrategyId::LgCotrain => "LG-CoTrain",
            StrategyId::SgCotrain => "SG-CoTrain",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }
}

/// Strategy hyperparameters. Fields a strategy does not use are still validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub strategy: StrategyId,
    pub rounds: usize,
    /// Confidence threshold (self-training) or top-two gap threshold (Conf-ST-MixUp).
    pub threshold: f64,
    /// λ ~ Beta(α, α).
    pub mixup_alpha: f64,
    pub sharpen_temperature: f64,
    pub aum_keep_percentile: f64,
    pub uncertainty_samples: usize,
    pub low_weight: f64,
    /// Per-class fraction of pseudo-labels UST accepts each round.
    pub accept_fraction: f64,
    /// Feature-dropout rate of the MixMatch augmentation.
    pub augment_drop_rate: f64,
    /// Augmented passes averaged into a MixMatch label guess.
    pub augment_passes: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyId::Supervised,
            rounds: 3,
            threshold: 0.9,
            mixup_alpha: 0.75,
            sharpen_temperature: 0.5,
            aum_keep_percentile: 50.0,
            uncertainty_samples: 10,
            low_weight: 0.3,
            accept_fraction: 0.5,
            augment_drop_rate: 0.1,
            augment_passes: 2,
        }
    }
}

impl StrategyConfig {
    pub fn for_strategy(strategy: StrategyId) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CoreError::InvalidConfig(format!("strategy config: {what}")));
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold must lie in [0, 1]");
        }
        if !(self.mixup_alpha > 0.0) || !self.mixup_alpha.is_finite() {
            return bad("mixup_alpha must be positive");
        }
        if !(self.sharpen_temperature > 0.0 && self.sharpen_temperature <= 1.0) {
            return bad("sharpen_temperature must lie in (0, 1]");
        }
        if !(self.aum_keep_percentile > 0.0 && self.aum_keep_percentile <= 100.0) {
            return bad("aum_keep_percentile must lie in (0, 100]");
        }
        if !(0.0..=1.0).contains(&self.low_weight) {
            return bad("low_weight must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.accept_fraction) {
            return bad("accept_fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.augment_drop_rate) {
            return bad("augment_drop_rate must lie in [0, 1)");
        }
        if self.augment_passes == 0 {
            return bad("augment_passes must be at least 1");
        }
        if self.strategy == StrategyId::Ust && self.uncertainty_samples < 2 {
            return bad("UST needs at least two uncertainty samples");
        }
        Ok(())
    }
}

/// Classifier shape shared by every model a strategy fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub dropout_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden_dim: 64, dropout_rate: 0.1 }
    }
}

/// Everything a strategy run needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub bins: usize,
}

impl RunSettings {
    pub fn new(model: ModelConfig, train: TrainConfig, strategy: StrategyConfig, seed: u64) -> Self {
        Self { model, train, strategy, seed, bins: DEFAULT_BINS }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.strategy.validate()?;
        if !(0.0..1.0).contains(&self.model.dropout_rate) {
            return Err(CoreError::InvalidConfig("dropout_rate must lie in [0, 1)".into()));
        }
        if self.bins == 0 {
            return Err(CoreError::InvalidConfig("bins must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub id: String,
    pub features: FeatureVector,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledPoint {
    pub id: String,
    pub features: FeatureVector,
    /// Known only for auditing; never used for training.
    pub gold: Option<usize>,
}

/// Featurized labeled/unlabeled pools plus evaluation splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslTask {
    pub class_count: usize,
    pub input_dim: usize,
    pub active_classes: Vec<usize>,
    pub labeled: Vec<LabeledPoint>,
    pub unlabeled: Vec<UnlabeledPoint>,
    pub val: Vec<LabeledPoint>,
    pub test: Vec<LabeledPoint>,
}

impl SslTask {
    /// Featurize a corpus under a split plan. Val/test examples without gold labels are skipped.
    pub fn from_split(corpus: &EventCorpus, plan: &SplitPlan, featurizer: &FeaturizerConfig) -> Result<Self> {
        featurizer.validate()?;
        let point = |i: usize| -> LabeledPoint {
            let ex = &corpus.train[i];
            LabeledPoint {
                id: ex.id.clone(),
                features: featurize_text(&ex.text, featurizer),
                label: ex.gold_label.expect("train examples carry gold labels"),
            }
        };
        let eval = |examples: &[crate::corpus::Example]| -> Vec<LabeledPoint> {
            examples
                .iter()
                .filter_map(|ex| {
                    ex.gold_label.map(|label| LabeledPoint {
                        id: ex.id.clone(),
                        features: featurize_text(&ex.text, featurizer),
                        label,
                    })
                })
                .collect()
        };
        let task = Self {
            class_count: corpus.schema.len(),
            input_dim: featurizer.dim,
            active_classes: corpus.active_classes(),
            labeled: plan.labeled.iter().map(|&i| point(i)).collect(),
            unlabeled: plan
                .unlabeled
                .iter()
                .map(|&i| {
                    let ex = &corpus.train[i];
                    UnlabeledPoint {
                        id: ex.id.clone(),
                        features: featurize_text(&ex.text, featurizer),
                        gold: ex.gold_label,
                    }
                })
                .collect(),
            val: eval(&corpus.val),
            test: eval(&corpus.test),
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(CoreError::TooFewClasses);
        }
        if self.active_classes.is_empty() {
            return Err(CoreError::EmptyInput("active classes"));
        }
        let labeled = self.labeled.iter().chain(&self.val).chain(&self.test);
        for p in labeled {
            if p.label >= self.class_count {
                return Err(CoreError::ClassOutOfRange { index: p.label, class_count: self.class_count });
            }
            if p.features.dim() != self.input_dim {
                return Err(CoreError::DimensionMismatch { expected: self.input_dim, actual: p.features.dim() });
            }
        }
        for p in &self.unlabeled {
            if p.features.dim() != self.input_dim {
                return Err(CoreError::DimensionMismatch { expected: self.input_dim, actual: p.features.dim() });
            }
        }
        Ok(())
    }

    pub(crate) fn labeled_examples(&self) -> Vec<TrainExample> {
        self.labeled.iter().map(|p| TrainExample::hard(p.features.clone(), p.label, self.class_count)).collect()
    }

    pub(crate) fn unlabeled_refs(&self) -> impl Iterator<Item = (&str, &FeatureVector)> {
        self.unlabeled.iter().map(|p| (p.id.as_str(), &p.features))
    }
}

/// Per-round pseudo-label accounting; `accepted + rejected + oos` equals |D_U|.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCounts {
    pub round: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub oos: usize,
    /// Accepted pseudo-labels that match gold, when gold labels are known.
    pub accepted_correct: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: StrategyConfig,
    pub seed: u64,
    pub rounds: Vec<RoundCounts>,
    pub val: Option<MetricsReport>,
    pub test: Option<MetricsReport>,
    pub wall_time_secs: f64,
    pub notes: Vec<String>,
}

/// One line of the pseudo-label audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub id: String,
    pub gold: Option<usize>,
    pub pseudo: PseudoClass,
    pub accepted: bool,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub params: ClassifierParams,
    pub record: RunRecord,
    pub audit: Vec<AuditEntry>,
}

/// Bookkeeping shared by the strategy loops.
pub(crate) struct Ledger {
    pub rounds: Vec<RoundCounts>,
    pub audit: Vec<AuditEntry>,
    pub notes: Vec<String>,
}

impl Ledger {
    pub fn new() -> Self {
        Self { rounds: Vec::new(), audit: Vec::new(), notes: Vec::new() }
    }

    /// Record one round; `decisions[j]` is `(pseudo label, accepted)` for D_U item `j`.
    pub fn record_round(&mut self, task: &SslTask, round: usize, decisions: &[(PseudoClass, bool)]) {
        let mut counts = RoundCounts { round, accepted: 0, rejected: 0, oos: 0, accepted_correct: None };
        let mut correct = Some(0usize);
        for (point, &(pseudo, accepted)) in task.unlabeled.iter().zip(decisions) {
            match (pseudo, accepted) {
                (PseudoClass::OutOfSchema, _) => counts.oos += 1,
                (PseudoClass::Class(c), true) => {
                    counts.accepted += 1;
                    correct = match (correct, point.gold) {
                        (Some(n), Some(g)) => Some(n + usize::from(g == c)),
                        _ => None,
                    };
                }
                (PseudoClass::Class(_), false) => counts.rejected += 1,
            }
            self.audit.push(AuditEntry { id: point.id.clone(), gold: point.gold, pseudo, accepted, round });
        }
        counts.accepted_correct = correct;
        self.rounds.push(counts);
    }

    pub fn finish(self, task: &SslTask, settings: &RunSettings, params: ClassifierParams) -> Result<RunOutcome> {
        let record = RunRecord {
            config: settings.strategy.clone(),
            seed: settings.seed,
            rounds: self.rounds,
            val: evaluate(&params, &task.val, task, settings.bins)?,
            test: evaluate(&params, &task.test, task, settings.bins)?,
            wall_time_secs: 0.0,
            notes: self.notes,
        };
        Ok(RunOutcome { params, record, audit: self.audit })
    }
}

/// Metrics of `params` on `points`; `None` when there is nothing to evaluate.
pub fn evaluate(params: &ClassifierParams, points: &[LabeledPoint], task: &SslTask, bins: usize) -> Result<Option<MetricsReport>> {
    if points.is_empty() {
        return Ok(None);
    }
    let mut preds = Vec::with_capacity(points.len());
    let mut confs = Vec::with_capacity(points.len());
    let mut golds = Vec::with_capacity(points.len());
    for p in points {
        let (_, probs) = forward(params, &p.features)?;
        let c = probs.argmax();
        preds.push(c);
        confs.push(probs.probs()[c].clamp(0.0, 1.0));
        golds.push(p.label);
    }
    MetricsReport::from_predictions(&preds, &confs, &golds, task.class_count, &task.active_classes, bins).map(Some)
}

/// Validation Macro-F1 of `params`, or `None` without validation data.
fn val_macro_f1(params: &ClassifierParams, task: &SslTask) -> Result<Option<f64>> {
    if task.val.is_empty() {
        return Ok(None);
    }
    let mut preds = Vec::with_capacity(task.val.len());
    let mut golds = Vec::with_capacity(task.val.len());
    for p in &task.val {
        let (_, probs) = forward(params, &p.features)?;
        preds.push(probs.argmax());
        golds.push(p.label);
    }
    Ok(Some(crate::metrics::macro_f1(&preds, &golds, &task.active_classes)?.macro_f1))
}

/// Fresh seeded model trained on `examples`, keeping the epoch with the best
/// validation Macro-F1 (earliest on ties; the last epoch without validation data).
pub fn fit(task: &SslTask, settings: &RunSettings, examples: &[TrainExample], seed: u64) -> Result<ClassifierParams> {
    let examples: Vec<TrainExample> = examples.iter().filter(|e| e.weight > 0.0).cloned().collect();
    let init = init_params(task.input_dim, settings.model.hidden_dim, task.class_count, seed)?
        .with_dropout(settings.model.dropout_rate)?;
    if examples.is_empty() {
        return Err(CoreError::EmptyInput("training pool"));
    }
    let config = TrainConfig { seed, ..settings.train.clone() };
    let mut best: Option<(f64, ClassifierParams)> = None;
    let (last, _) = train_with(&init, &examples, &config, |_, params| {
        if let Some(score) = val_macro_f1(params, task)? {
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, params.clone()));
            }
        }
        Ok(())
    })?;
    Ok(best.map_or(last, |(_, p)| p))
}

/// Trains only on D_L.
pub fn run_supervised(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    let params = supervised_params(task, settings)?;
    Ledger::new().finish(task, settings, params)
}

pub(crate) fn supervised_params(task: &SslTask, settings: &RunSettings) -> Result<ClassifierParams> {
    settings.validate()?;
    task.validate()?;
    if task.labeled.is_empty() {
        return Err(CoreError::EmptyInput("labeled pool"));
    }
    fit(task, settings, &task.labeled_examples(), settings.seed)
}

/// Full-supervision reference: trains on D_L plus the gold labels of D_U.
pub fn run_upper_bound(task: &SslTask, settings: &RunSettings) -> Result<RunOutcome> {
    settings.validate()?;
    task.validate()?;
    let mut pool = task.labeled_examples();
    for p in &task.unlabeled {
        let gold = p.gold.ok_or_else(|| CoreError::MissingGold(p.id.clone()))?;
        pool.push(TrainExample::hard(p.features.clone(), gold, task.class_count));
    }
    let params = fit(task, settings, &pool, settings.seed)?;
    Ledger::new().finish(task, settings, params)
}

/// Dispatch on `settings.strategy.strategy`. LLM-guided strategies need
/// `oracle_labels`, aligned with `task.unlabeled`.
pub fn run_strategy(task: &SslTask, settings: &RunSettings, oracle_labels: Option<&[PseudoLabel]>) -> Result<RunOutcome> {
    let need = |labels: Option<&[PseudoLabel]>| -> Result<Vec<PseudoLabel>> {
        let labels = labels.ok_or_else(|| {
            CoreError::InvalidConfig(format!("{} needs oracle pseudo-labels", settings.strategy.strategy.key()))
        })?;
        Ok(labels.to_vec())
    };
    match settings.strategy.strategy {
        StrategyId::Supervised => run_supervised(task, settings),
        StrategyId::SelfTrain => run_self_train(task, settings),
        StrategyId::Ust => run_ust(task, settings),
        StrategyId::Mixmatch => run_mixmatch(task, settings),
        StrategyId::AumSt => run_aum_st(task, settings),
        StrategyId::ConfStMixup => run_conf_st_mixup(task, settings),
        StrategyId::AumStMixup => run_aum_st_mixup(task, settings),
        StrategyId::VerifyMatch => run_verify_match(task, &need(oracle_labels)?, settings),
        StrategyId::LgCotrain => run_lg_cotrain(task, &need(oracle_labels)?, settings),
        StrategyId::SgCotrain => run_sg_cotrain(task, settings),
    }
}

pub(crate) fn check_oracle_alignment(task: &SslTask, labels: &[PseudoLabel]) -> Result<()> {
    if labels.len() != task.unlabeled.len() {
        return Err(CoreError::DimensionMismatch { expected: task.unlabeled.len(), actual: labels.len() });
    }
    for (p, l) in task.unlabeled.iter().zip(labels) {
        if p.id != l.example_id {
            return Err(CoreError::InvalidConfig(format!("oracle label for `{}` where `{}` expected", l.example_id, p.id)));
        }
        if let PseudoClass::Class(c) = l.label {
            if c >= task.class_count {
                return Err(CoreError::ClassOutOfRange { index: c, class_count: task.class_count });
            }
        }
    }
    Ok(())
}

/// Hard-label training example for a pseudo-labeled unlabeled point.
pub(crate) fn pseudo_example(task: &SslTask, j: usize, class: usize, weight: f64) -> TrainExample {
    TrainExample {
        features: task.unlabeled[j].features.clone(),
        target: LabelDistribution::one_hot(class, task.class_count),
        weight,
    }
}

#[cfg(test)]
pub(crate) mod testutil;
