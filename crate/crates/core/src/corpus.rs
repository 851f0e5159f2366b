//! Event corpora, the label schema, and labels-per-class splits.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::seed::{self, streams};

/// Header line of the corpus TSV format.
pub const TSV_HEADER: &str = "id\ttext\tlabel";

const HUMAID_CATEGORIES: [&str; 10] = [
    "Caution and advice",
    "Sympathy and support",
    "Requests or urgent needs",
    "Displaced people and evacuations",
    "Injured or dead people",
    "Missing or found people",
    "Infrastructure and utility damage",
    "Rescue, volunteering, or donation effort",
    "Other relevant information",
    "Not humanitarian",
];

/// Ordered set of class names. Indices are stable for the lifetime of an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSchema {
    categories: Vec<String>,
}

impl LabelSchema {
    pub fn new<I, S>(categories: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        if categories.len() < 2 {
            return Err(CoreError::InvalidSchema("need at least two categories".into()));
        }
        let mut seen = BTreeSet::new();
        for name in &categories {
            if name.trim().is_empty() {
                return Err(CoreError::InvalidSchema("empty category name".into()));
            }
            if name.contains('\t') || name.contains('\n') {
                return Err(CoreError::InvalidSchema(format!("category `{name}` contains a tab or newline")));
            }
            if !seen.insert(name.as_str()) {
                return Err(CoreError::InvalidSchema(format!("duplicate category `{name}`")));
            }
        }
        Ok(Self { categories })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.categories.get(index).map(String::as_str)
    }

    /// Exact, case-sensitive lookup.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    /// Trimmed, case-insensitive lookup used for free-text oracle answers.
    pub fn match_response(&self, response: &str) -> Option<usize> {
        let wanted = response.trim().to_lowercase();
        self.categories.iter().position(|c| c.to_lowercase() == wanted)
    }
}

impl TryFrom<Vec<String>> for LabelSchema {
    type Error = CoreError;

    fn try_from(value: Vec<String>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<LabelSchema> for Vec<String> {
    fn from(schema: LabelSchema) -> Self {
        schema.categories
    }
}

/// The ten HumAID humanitarian categories in their canonical order.
pub fn humaid_schema() -> LabelSchema {
    LabelSchema::new(HUMAID_CATEGORIES).expect("static schema is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub gold_label: Option<usize>,
}

impl Example {
    pub fn new(id: impl Into<String>, text: impl Into<String>, gold_label: Option<usize>) -> Self {
        Self { id: id.into(), text: text.into(), gold_label }
    }
}

/// Parse a corpus TSV document (`id<TAB>text<TAB>label`, header required).
///
/// Row numbers in errors are 1-based file line numbers, header included.
pub fn parse_examples_tsv(input: &str, schema: &LabelSchema) -> Result<Vec<Example>> {
    let mut lines = input.split('\n').enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == TSV_HEADER => {}
        Some((_, header)) if header.is_empty() && input.is_empty() => return Ok(Vec::new()),
        _ => {
            return Err(CoreError::MalformedRow { row: 1, message: format!("expected header `{TSV_HEADER}`") });
        }
    }
    let mut examples = Vec::new();
    let mut ids = BTreeSet::new();
    let mut lines = lines.peekable();
    while let Some((index, raw)) = lines.next() {
        let row = index + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() && lines.peek().is_none() {
            break;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CoreError::MalformedRow {
                row,
                message: format!("expected 3 tab-separated columns, found {}", fields.len()),
            });
        }
        let (id, text, label) = (fields[0], fields[1], fields[2]);
        if id.is_empty() {
            return Err(CoreError::MalformedRow { row, message: "empty id".into() });
        }
        if !ids.insert(id) {
            return Err(CoreError::MalformedRow { row, message: format!("duplicate id `{id}`") });
        }
        let gold_label = if label.is_empty() {
            None
        } else {
            Some(schema.index_of(label).ok_or_else(|| CoreError::UnknownLabel { row, label: label.to_string() })?)
        };
        examples.push(Example::new(id, text, gold_label));
    }
    Ok(examples)
}

/// Render examples in the corpus TSV format. Output parses back to the same examples.
pub fn render_examples_tsv(examples: &[Example], schema: &LabelSchema) -> Result<String> {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for (i, ex) in examples.iter().enumerate() {
        let row = i + 2;
        for (what, value) in [("id", &ex.id), ("text", &ex.text)] {
            if value.contains(['\t', '\n', '\r']) {
                return Err(CoreError::MalformedRow { row, message: format!("{what} contains a tab or newline") });
            }
        }
        let label = match ex.gold_label {
            Some(c) => schema.name(c).ok_or(CoreError::ClassOutOfRange { index: c, class_count: schema.len() })?,
            None => "",
        };
        out.push_str(&ex.id);
        out.push('\t');
        out.push_str(&ex.text);
        out.push('\t');
        out.push_str(label);
        out.push('\n');
    }
    Ok(out)
}

/// One disaster event: train/val/test examples over a shared schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCorpus {
    pub event_name: String,
    pub schema: LabelSchema,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
    class_counts: Vec<usize>,
}

impl EventCorpus {
    pub fn new(
        event_name: impl Into<String>,
        schema: LabelSchema,
        train: Vec<Example>,
        val: Vec<Example>,
        test: Vec<Example>,
    ) -> Result<Self> {
        let mut class_counts = alloc::vec![0usize; schema.len()];
        let mut ids = BTreeSet::new();
        for (split, examples) in [("train", &train), ("val", &val), ("test", &test)] {
            for ex in examples.iter() {
                if !ids.insert(ex.id.as_str()) {
                    return Err(CoreError::InvalidConfig(format!("duplicate example id `{}` ({split})", ex.id)));
                }
                if let Some(c) = ex.gold_label {
                    if c >= schema.len() {
                        return Err(CoreError::ClassOutOfRange { index: c, class_count: schema.len() });
                    }
                }
            }
        }
        for ex in &train {
            let c = ex.gold_label.ok_or_else(|| CoreError::MissingGold(ex.id.clone()))?;
            class_counts[c] += 1;
        }
        Ok(Self { event_name: event_name.into(), schema, train, val, test, class_counts })
    }

    /// Per-class tally of train examples, indexed like the schema.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Classes with at least one train example.
    pub fn active_classes(&self) -> Vec<usize> {
        self.class_counts.iter().enumerate().filter(|(_, &n)| n > 0).map(|(c, _)| c).collect()
    }
}

/// Membership of a train example in a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Labeled,
    Unlabeled,
}

/// Partition of the train split into labeled (D_L) and unlabeled (D_U) parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub budget_k: usize,
    pub seed: u64,
    /// Train indices of labeled examples, ascending.
    pub labeled: Vec<usize>,
    /// Train indices of unlabeled examples, ascending.
    pub unlabeled: Vec<usize>,
}

impl SplitPlan {
    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn labeled_ids<'a>(&'a self, corpus: &'a EventCorpus) -> impl Iterator<Item = &'a str> + 'a {
        self.labeled.iter().map(|&i| corpus.train[i].id.as_str())
    }

    pub fn unlabeled_ids<'a>(&'a self, corpus: &'a EventCorpus) -> impl Iterator<Item = &'a str> + 'a {
        self.unlabeled.iter().map(|&i| corpus.train[i].id.as_str())
    }

    /// Audit record: one `id<TAB>L|U` line per train example, in corpus order.
    pub fn render_records(&self, corpus: &EventCorpus) -> String {
        let labeled: BTreeSet<usize> = self.labeled.iter().copied().collect();
        let mut out = String::new();
        for (i, ex) in corpus.train.iter().enumerate() {
            out.push_str(&ex.id);
            out.push_str(if labeled.contains(&i) { "\tL\n" } else { "\tU\n" });
        }
        out
    }

    /// Inverse of [`SplitPlan::render_records`].
    pub fn parse_records(input: &str, corpus: &EventCorpus, budget_k: usize, seed: u64) -> Result<Self> {
        let mut membership = alloc::collections::BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, tag) = line
                .split_once('\t')
                .ok_or_else(|| CoreError::MalformedRow { row: i + 1, message: "expected `id<TAB>L|U`".into() })?;
            let m = match tag {
                "L" => Membership::Labeled,
                "U" => Membership::Unlabeled,
                other => {
                    return Err(CoreError::MalformedRow { row: i + 1, message: format!("unknown membership `{other}`") })
                }
            };
            membership.insert(id, m);
        }
        let mut plan = SplitPlan { budget_k, seed, labeled: Vec::new(), unlabeled: Vec::new() };
        for (i, ex) in corpus.train.iter().enumerate() {
            match membership.get(ex.id.as_str()) {
                Some(Membership::Labeled) => plan.labeled.push(i),
                Some(Membership::Unlabeled) => plan.unlabeled.push(i),
                None => return Err(CoreError::InvalidConfig(format!("split record lacks train id `{}`", ex.id))),
            }
        }
        Ok(plan)
    }
}

/// Sample `min(budget_k, available)` labeled examples per class, uniformly without
/// replacement, visiting classes in schema order with one seeded generator.
pub fn make_split_plan(corpus: &EventCorpus, budget_k: usize, seed: u64) -> Result<SplitPlan> {
    if budget_k == 0 {
        return Err(CoreError::InvalidConfig("budget_k must be at least 1".into()));
    }
    if corpus.train.is_empty() {
        return Err(CoreError::EmptyInput("train split"));
    }
    let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); corpus.schema.len()];
    for (i, ex) in corpus.train.iter().enumerate() {
        // EventCorpus::new guarantees gold labels on train.
        if let Some(c) = ex.gold_label {
            by_class[c].push(i);
        }
    }
    let mut rng = seed::rng(seed::derive(seed, streams::SPLIT));
    let mut is_labeled = alloc::vec![false; corpus.train.len()];
    for members in &mut by_class {
        let take = budget_k.min(members.len());
        let (chosen, _) = members.partial_shuffle(&mut rng, take);
        for &i in chosen.iter() {
            is_labeled[i] = true;
        }
    }
    let (mut labeled, mut unlabeled) = (Vec::new(), Vec::new());
    for (i, &l) in is_labeled.iter().enumerate() {
        if l {
            labeled.push(i)
        } else {
            unlabeled.push(i)
        }
    }
    Ok(SplitPlan { budget_k, seed, labeled, unlabeled })
}
