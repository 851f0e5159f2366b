//! TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crisis_ssl_core::corpus::{humaid_schema, EventCorpus, LabelSchema};
use crisis_ssl_core::features::FeaturizerConfig;
use crisis_ssl_core::metrics::DEFAULT_BINS;
use crisis_ssl_core::model::{Optimizer, TrainConfig};
use crisis_ssl_core::oracle::{OracleProfile, PromptTemplate, HUMAID_DEFINITIONS, HUMAID_ZERO_SHOT_PROFILE};
use crisis_ssl_core::strategies::{ModelConfig, StrategyConfig, StrategyId};
use crisis_ssl_core::synthetic::{generate_topic_corpus, scale_counts, TopicCorpusSpec, KERALA_TRAIN_COUNTS};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::remote::RemoteSettings;

/// A row of the result tables: a strategy or one of the two reference baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Oracle labels used directly as test predictions.
    ZeroShot,
    Strategy(StrategyId),
    /// Trained on D_L plus the gold labels of D_U.
    UpperBound,
}

impl Method {
    pub fn key(self) -> &'static str {
        match self {
            Method::ZeroShot => "zero_shot",
            Method::Strategy(s) => s.key(),
            Method::UpperBound => "upper_bound",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::ZeroShot => "Zero-shot",
            Method::Strategy(s) => s.display_name(),
            Method::UpperBound => "Upper bound",
        }
    }

    /// Every strategy plus both baselines, in table order.
    pub fn all() -> Vec<Method> {
        let mut all = vec![Method::ZeroShot];
        all.extend(StrategyId::ALL.into_iter().map(Method::Strategy));
        all.push(Method::UpperBound);
        all
    }

    pub fn needs_oracle(self) -> bool {
        match self {
            Method::ZeroShot => true,
            Method::Strategy(s) => s.needs_oracle_labels(),
            Method::UpperBound => false,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_shot" => Ok(Method::ZeroShot),
            "upper_bound" => Ok(Method::UpperBound),
            _ => StrategyId::from_key(s).map(Method::Strategy).ok_or_else(|| Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.key().into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Pseudo-labels from the supervised model trained on D_L.
    Teacher,
    /// A chat-completion endpoint.
    Remote,
    /// Gold labels corrupted at a per-class accuracy.
    Simulated,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "teacher" => Ok(OracleKind::Teacher),
            "remote" => Ok(OracleKind::Remote),
            "simulated" => Ok(OracleKind::Simulated),
            _ => Err(Error::Config(format!("unknown oracle `{s}` (teacher, remote or simulated)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Simulator per-class accuracies; defaults to the HumAID zero-shot profile.
    pub profile: Option<Vec<f64>>,
    /// Simulator accuracy for every class; overrides `profile`.
    pub accuracy: Option<f64>,
    pub remote: RemoteSettings,
    /// Prompt with `{categories}` and `{text}` slots.
    pub prompt_template: Option<String>,
    /// One definition per category; defaults to the HumAID definitions.
    pub definitions: Option<Vec<String>>,
    /// Response cache; defaults to `<output_dir>/annotation-cache.jsonl`.
    pub cache: Option<PathBuf>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kind: OracleKind::Simulated,
            profile: None,
            accuracy: None,
            remote: RemoteSettings::default(),
            prompt_template: None,
            definitions: None,
            cache: None,
        }
    }
}

impl OracleConfig {
    /// Simulator profile for `class_count` classes seeded with `seed`.
    pub fn profile(&self, class_count: usize, seed: u64) -> Result<OracleProfile> {
        let profile = match (self.accuracy, &self.profile) {
            (Some(acc), _) => OracleProfile::uniform(acc, class_count, seed)?,
            (None, Some(p)) => OracleProfile::new(p.clone(), seed)?,
            (None, None) if class_count == HUMAID_ZERO_SHOT_PROFILE.len() => OracleProfile::humaid_default(seed),
            (None, None) => {
                return Err(Error::Config("simulated oracle needs `profile` or `accuracy` for a non-HumAID schema".into()))
            }
        };
        if profile.per_class_accuracy.len() != class_count {
            return Err(Error::Config(format!(
                "oracle profile has {} entries for {class_count} classes",
                profile.per_class_accuracy.len()
            )));
        }
        Ok(profile)
    }

    pub fn template(&self, schema: &LabelSchema) -> PromptTemplate {
        let mut template = PromptTemplate::humaid_default();
        if let Some(t) = &self.prompt_template {
            template.template = t.clone();
        }
        template.definitions = match &self.definitions {
            Some(d) => d.clone(),
            None if schema == &humaid_schema() => HUMAID_DEFINITIONS.iter().map(|d| d.to_string()).collect(),
            None => Vec::new(),
        };
        template
    }
}

/// Seeded topic corpus with the Kerala class imbalance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticEvent {
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub topical_rate: f64,
    pub confusion_rate: f64,
    /// Relative class sizes; defaults to the Kerala train distribution.
    pub class_counts: Option<Vec<usize>>,
}

impl Default for SyntheticEvent {
    fn default() -> Self {
        let base = TopicCorpusSpec::kerala_like(0);
        Self {
            seed: 0,
            train: 5000,
            val: 750,
            test: 1500,
            topical_rate: base.topical_rate,
            confusion_rate: base.confusion_rate,
            class_counts: None,
        }
    }
}

impl SyntheticEvent {
    pub fn spec(&self, name: &str) -> TopicCorpusSpec {
        let counts = self.class_counts.clone().unwrap_or_else(|| KERALA_TRAIN_COUNTS.to_vec());
        TopicCorpusSpec {
            name: name.into(),
            train_counts: scale_counts(&counts, self.train),
            val_counts: scale_counts(&counts, self.val),
            test_counts: scale_counts(&counts, self.test),
            topical_rate: self.topical_rate,
            confusion_rate: self.confusion_rate,
            ..TopicCorpusSpec::kerala_like(self.seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub name: String,
    /// Directory with `train.tsv` (and optionally `val.tsv`, `test.tsv`) or a single TSV.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticEvent>,
}

impl EventConfig {
    pub fn load(&self, schema: &LabelSchema) -> Result<EventCorpus> {
        match (&self.path, &self.synthetic) {
            (Some(path), None) => io::load_named_corpus(&self.name, path, schema),
            (None, Some(syn)) => Ok(generate_topic_corpus(&syn.spec(&self.name), schema)?),
            _ => Err(Error::Config(format!("event `{}` needs exactly one of `path` or `synthetic`", self.name))),
        }
    }
}

/// Everything one grid execution needs. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub events: Vec<EventConfig>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Category names; defaults to the HumAID schema.
    pub schema: Option<Vec<String>>,
    pub featurizer: FeaturizerConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Shared strategy hyperparameters; `strategy` is set per method.
    pub strategy: StrategyConfig,
    pub oracle: OracleConfig,
    pub bins: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            events: Vec::new(),
            budgets: vec![5, 10, 25, 50],
            seeds: vec![0, 1, 2],
            methods: Method::all(),
            schema: None,
            featurizer: FeaturizerConfig::default(),
            model: ModelConfig { hidden_dim: 0, dropout_rate: 0.1 },
            train: TrainConfig {
                learning_rate: 0.05,
                batch_size: 32,
                epochs: 10,
                weight_decay: 0.0,
                seed: 0,
                optimizer: Optimizer::Adam,
            },
            strategy: StrategyConfig::default(),
            oracle: OracleConfig::default(),
            bins: DEFAULT_BINS,
            workers: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Parse TOML layered over the defaults: a partial section such as
    /// `[train]` with only `epochs` keeps the default learning rate.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = toml::Table::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Parse, resolve relative paths and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::from_toml(&io::read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for event in &mut self.events {
            if let Some(p) = event.path.as_mut() {
                fix(p);
            }
        }
        if let Some(p) = self.oracle.cache.as_mut() {
            fix(p);
        }
    }

    pub fn label_schema(&self) -> Result<LabelSchema> {
        match &self.schema {
            Some(names) => Ok(LabelSchema::new(names.iter().cloned())?),
            None => Ok(humaid_schema()),
        }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.oracle.cache.clone().unwrap_or_else(|| self.output_dir.join("annotation-cache.jsonl"))
    }

    pub fn strategy_config(&self, strategy: StrategyId) -> StrategyConfig {
        StrategyConfig { strategy, ..self.strategy.clone() }
    }

    /// Checks everything that can fail before a run starts, including that
    /// corpus paths exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.events.is_empty() {
            return bad("at least one event is required".into());
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return bad("budgets must be a non-empty list of positive counts".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let schema = self.label_schema()?;
        self.featurizer.validate()?;
        self.train.validate()?;
        for m in &self.methods {
            if let Method::Strategy(s) = m {
                self.strategy_config(*s).validate()?;
            }
        }
        if !(0.0..1.0).contains(&self.model.dropout_rate) {
            return bad("model.dropout_rate must lie in [0, 1)".into());
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for event in &self.events {
            if !names.insert(event.name.as_str()) {
                return bad(format!("duplicate event name `{}`", event.name));
            }
            if event.name.is_empty() || event.name.contains(['/', '\\', '\t', '\n', ',']) {
                return bad(format!("event name `{}` must be non-empty without separators", event.name));
            }
            match (&event.path, &event.synthetic) {
                (Some(p), None) if !p.exists() => return bad(format!("event `{}`: {} does not exist", event.name, p.display())),
                (Some(_), None) => {}
                (None, Some(syn)) => syn.spec(&event.name).validate(&schema)?,
                _ => return bad(format!("event `{}` needs exactly one of `path` or `synthetic`", event.name)),
            }
        }
        match self.oracle.kind {
            OracleKind::Simulated => {
                self.oracle.profile(schema.len(), 0)?;
            }
            OracleKind::Remote => self.oracle.remote.validate()?,
            OracleKind::Teacher => {}
        }
        Ok(())
    }
}

/// Deep-merge `over` into `base`; tables merge key by key, anything else replaces.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        budgets = [5]
        seeds = [1, 2]
        methods = ["supervised", "lg_cotrain", "zero_shot"]
        output_dir = "out"

        [[events]]
        name = "syn"
        [events.synthetic]
        seed = 3
        train = 400
        val = 60
        test = 120

        [oracle]
        kind = "simulated"
        accuracy = 0.8

        [train]
        epochs = 4
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.resolve_paths(Path::new("/base"));
        cfg.validate().unwrap();
        assert_eq!(cfg.methods, vec![
            Method::Strategy(StrategyId::Supervised),
            Method::Strategy(StrategyId::LgCotrain),
            Method::ZeroShot
        ]);
        assert_eq!(cfg.train.epochs, 4);
        assert_eq!(cfg.train.learning_rate, 0.05);
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.cache_path(), PathBuf::from("/base/out/annotation-cache.jsonl"));
        let corpus = cfg.events[0].load(&cfg.label_schema().unwrap()).unwrap();
        assert_eq!(corpus.event_name, "syn");
        assert!((390..=410).contains(&corpus.train.len()));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cases = [
            MINIMAL.replace("budgets = [5]", "budgets = []"),
            MINIMAL.replace("seeds = [1, 2]", "seeds = []"),
            MINIMAL.replace("\"zero_shot\"", "\"nonsense\""),
            MINIMAL.replace("accuracy = 0.8", "accuracy = 1.8"),
            MINIMAL.replace("[events.synthetic]", "path = \"/definitely/missing\"\n[events.synthetic]"),
            MINIMAL.replace("epochs = 4", "epochs = 4\nbogus = 1"),
        ];
        for text in cases {
            let result = ExperimentConfig::from_toml(&text).and_then(|c| c.validate());
            assert!(result.is_err(), "accepted:\n{text}");
        }
    }

    #[test]
    fn missing_event_path_is_reported() {
        let text = MINIMAL.replace("[events.synthetic]\n        seed = 3\n        train = 400\n        val = 60\n        test = 120", "path = \"/definitely/missing\"");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
    }

    #[test]
    fn method_keys_round_trip() {
        for m in Method::all() {
            assert_eq!(m.key().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::all().len(), 12);
    }
}
