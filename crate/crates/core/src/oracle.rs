//! Pseudo-label sources that need no IO: the teacher model and the seeded
//! per-class accuracy simulator. Prompt rendering and answer parsing for remote
//! annotators also live here so they can be tested without a network.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelSchema;
use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::model::{forward, ClassifierParams};
use crate::seed::{self, fnv1a64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Teacher,
    Remote,
    Simulated,
}

/// A pseudo-label is either a schema class or an out-of-schema answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoClass {
    Class(usize),
    OutOfSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub example_id: String,
    pub label: PseudoClass,
    pub confidence: f64,
    pub source: LabelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

impl PseudoLabel {
    pub fn class(&self) -> Option<usize> {
        match self.label {
            PseudoClass::Class(c) => Some(c),
            PseudoClass::OutOfSchema => None,
        }
    }

    pub fn is_oos(&self) -> bool {
        self.label == PseudoClass::OutOfSchema
    }

    /// Interpret a free-text annotator answer against the schema.
    pub fn from_response(example_id: impl Into<String>, response: &str, schema: &LabelSchema, source: LabelSource) -> Self {
        let label = match schema.match_response(response) {
            Some(c) => PseudoClass::Class(c),
            None => PseudoClass::OutOfSchema,
        };
        Self { example_id: example_id.into(), label, confidence: 1.0, source, raw_response: Some(response.into()) }
    }
}

/// Argmax pseudo-labels from a trained classifier; confidence is the max probability.
pub fn annotate_teacher<'a, I>(params: &ClassifierParams, unlabeled: I) -> Result<Vec<PseudoLabel>>
where
    I: IntoIterator<Item = (&'a str, &'a FeatureVector)>,
{
    unlabeled
        .into_iter()
        .map(|(id, x)| {
            let (_, probs) = forward(params, x)?;
            let c = probs.argmax();
            Ok(PseudoLabel {
                example_id: id.into(),
                label: PseudoClass::Class(c),
                confidence: probs.probs()[c],
                source: LabelSource::Teacher,
                raw_response: None,
            })
        })
        .collect()
}

/// Per-class accuracy of the simulated annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleProfile {
    pub per_class_accuracy: Vec<f64>,
    pub seed: u64,
}

/// Per-class zero-shot quality reported for the ten HumAID categories, in
/// schema order, used as the simulator's per-class accuracy.
pub const HUMAID_ZERO_SHOT_PROFILE: [f64; 10] = [0.634, 0.739, 0.526, 0.766, 0.885, 0.698, 0.704, 0.827, 0.276, 0.569];

impl OracleProfile {
    pub fn new(per_class_accuracy: Vec<f64>, seed: u64) -> Result<Self> {
        let profile = Self { per_class_accuracy, seed };
        profile.validate()?;
        Ok(profile)
    }

    pub fn uniform(accuracy: f64, class_count: usize, seed: u64) -> Result<Self> {
        Self::new(alloc::vec![accuracy; class_count], seed)
    }

    pub fn humaid_default(seed: u64) -> Self {
        Self { per_class_accuracy: HUMAID_ZERO_SHOT_PROFILE.to_vec(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class_accuracy.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(CoreError::InvalidConfig("per-class accuracy must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Emit the gold label with probability `per_class_accuracy[gold]`, otherwise a
/// uniformly drawn different class from `classes`. Each example's draw depends
/// only on its id and the profile seed.
pub fn annotate_simulated<'a, I>(examples: I, profile: &OracleProfile, classes: &[usize]) -> Result<Vec<PseudoLabel>>
where
    I: IntoIterator<Item = (&'a str, Option<usize>)>,
{
    profile.validate()?;
    examples
        .into_iter()
        .map(|(id, gold)| {
            let gold = gold.ok_or_else(|| CoreError::MissingGold(id.into()))?;
            let accuracy = *profile
                .per_class_accuracy
                .get(gold)
                .ok_or(CoreError::ClassOutOfRange { index: gold, class_count: profile.per_class_accuracy.len() })?;
            let mut rng = seed::rng(seed::derive(profile.seed, fnv1a64(id.as_bytes())));
            let draw: f64 = rng.random();
            let others: Vec<usize> = classes.iter().copied().filter(|&c| c != gold).collect();
            let label = if draw < accuracy || others.is_empty() { gold } else { others[rng.random_range(0..others.len())] };
            Ok(PseudoLabel {
                example_id: id.into(),
                label: PseudoClass::Class(label),
                confidence: 1.0,
                source: LabelSource::Simulated,
                raw_response: None,
            })
        })
        .collect()
}

/// Short definitions of the HumAID categories, in schema order.
pub const HUMAID_DEFINITIONS: [&str; 10] = [
    "Reports of warnings issued or lifted, guidance and tips related to the disaster.",
    "Tweets with prayers, thoughts, and emotional support.",
    "Reports of urgent needs or supplies such as food, water, clothing, money, medical supplies or blood.",
    "People who have relocated due to the crisis, even for a short time (includes evacuations).",
    "Reports of injured or dead people due to the disaster.",
    "Reports of missing or found people due to the disaster.",
    "Reports of any type of damage to infrastructure such as buildings, houses, roads, bridges, power lines, \
     communication poles, or vehicles.",
    "Reports of any type of rescue, volunteering, or donation efforts such as people being transported to safe \
     places, people being evacuated, people receiving medical aid or food, people in shelter facilities, donation \
     of money, or services.",
    "Information that does not belong to any of the above categories but is still useful for humanitarian aid.",
    "The post does not convey humanitarian aid-related information.",
];

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Classify the following disaster-related tweet into exactly one of these \
humanitarian categories.\n\n{categories}\n\nAnswer with the category name only.\n\nTweet: {text}";

/// Zero-shot prompt with a category-definition slot (`{categories}`) and a text slot (`{text}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template: String,
    /// One definition per schema category.
    pub definitions: Vec<String>,
}

impl PromptTemplate {
    pub fn humaid_default() -> Self {
        Self {
            template: DEFAULT_PROMPT_TEMPLATE.into(),
            definitions: HUMAID_DEFINITIONS.iter().map(|d| String::from(*d)).collect(),
        }
    }

    pub fn render_categories(&self, schema: &LabelSchema) -> String {
        let mut out = String::new();
        for (i, name) in schema.categories().iter().enumerate() {
            let def = self.definitions.get(i).map(String::as_str).unwrap_or("");
            out.push_str(&format!("- {name}: {def}\n"));
        }
        out.truncate(out.trim_end().len());
        out
    }

    pub fn render(&self, schema: &LabelSchema, text: &str) -> String {
        self.template.replace("{categories}", &self.render_categories(schema)).replace("{text}", text)
    }

    /// The prompt without the text slot filled; identifies the prompt for caching.
    pub fn skeleton(&self, schema: &LabelSchema) -> String {
        self.template.replace("{categories}", &self.render_categories(schema))
    }
}
