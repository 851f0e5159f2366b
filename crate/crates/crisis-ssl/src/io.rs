//! File formats: TSV corpora, split records, feature dumps, audit trails and
//! JSON documents.

use std::fs;
use std::path::Path;

use crisis_ssl_core::corpus::{parse_examples_tsv, render_examples_tsv, EventCorpus, Example, LabelSchema, SplitPlan};
use crisis_ssl_core::features::{featurize_text, FeaturizerConfig};
use crisis_ssl_core::metrics::ReliabilityBin;
use crisis_ssl_core::oracle::{LabelSource, PseudoClass, PseudoLabel};
use crisis_ssl_core::strategies::AuditEntry;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.tsv";
pub const VAL_FILE: &str = "val.tsv";
pub const TEST_FILE: &str = "test.tsv";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_examples(path: &Path, schema: &LabelSchema) -> Result<Vec<Example>> {
    let text = read_text(path)?;
    parse_examples_tsv(&text, schema).map_err(|e| Error::format(path, e))
}

pub fn write_examples(path: &Path, examples: &[Example], schema: &LabelSchema) -> Result<()> {
    write_text(path, &render_examples_tsv(examples, schema)?)
}

/// Load an event. `path` is either a directory holding `train.tsv` and
/// optionally `val.tsv` / `test.tsv`, or a single TSV used as the train split.
/// The event is named after the directory or file stem.
pub fn load_corpus(path: &Path, schema: &LabelSchema) -> Result<EventCorpus> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    load_named_corpus(&name, path, schema)
}

pub fn load_named_corpus(name: &str, path: &Path, schema: &LabelSchema) -> Result<EventCorpus> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let (train, val, test) = if meta.is_dir() {
        let optional = |file: &str| -> Result<Vec<Example>> {
            let p = path.join(file);
            if p.exists() {
                read_examples(&p, schema)
            } else {
                Ok(Vec::new())
            }
        };
        (read_examples(&path.join(TRAIN_FILE), schema)?, optional(VAL_FILE)?, optional(TEST_FILE)?)
    } else {
        (read_examples(path, schema)?, Vec::new(), Vec::new())
    };
    EventCorpus::new(name, schema.clone(), train, val, test).map_err(|e| Error::format(path, e))
}

/// Write an event as a directory of `train.tsv`, `val.tsv` and `test.tsv`.
pub fn write_corpus_dir(dir: &Path, corpus: &EventCorpus) -> Result<()> {
    write_examples(&dir.join(TRAIN_FILE), &corpus.train, &corpus.schema)?;
    write_examples(&dir.join(VAL_FILE), &corpus.val, &corpus.schema)?;
    write_examples(&dir.join(TEST_FILE), &corpus.test, &corpus.schema)
}

pub fn write_split(path: &Path, plan: &SplitPlan, corpus: &EventCorpus) -> Result<()> {
    write_text(path, &plan.render_records(corpus))
}

pub fn read_split(path: &Path, corpus: &EventCorpus, budget_k: usize, seed: u64) -> Result<SplitPlan> {
    let text = read_text(path)?;
    SplitPlan::parse_records(&text, corpus, budget_k, seed).map_err(|e| Error::format(path, e))
}

/// `id<TAB>index:weight,...` per example.
pub fn render_feature_dump<'a>(examples: impl IntoIterator<Item = &'a Example>, config: &FeaturizerConfig) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&ex.id);
        out.push('\t');
        out.push_str(&featurize_text(&ex.text, config).render_sparse());
        out.push('\n');
    }
    out
}

/// `id, gold, pseudo, accepted, round` with class names; OOS labels print as `OOS`.
pub fn render_audit_tsv(entries: &[AuditEntry], schema: &LabelSchema) -> String {
    let name = |c: usize| schema.name(c).unwrap_or("?").to_string();
    let mut out = String::from("id\tgold\tpseudo\taccepted\tround\n");
    for e in entries {
        let gold = e.gold.map(name).unwrap_or_default();
        let pseudo = match e.pseudo {
            PseudoClass::Class(c) => name(c),
            PseudoClass::OutOfSchema => "OOS".to_string(),
        };
        out.push_str(&format!("{}\t{gold}\t{pseudo}\t{}\t{}\n", e.id, e.accepted, e.round));
    }
    out
}

/// `id, label, confidence, source, raw_response`; tabs and newlines in raw
/// responses become spaces.
pub fn render_pseudo_labels_tsv(labels: &[PseudoLabel], schema: &LabelSchema) -> String {
    let mut out = String::from("id\tlabel\tconfidence\tsource\traw_response\n");
    for l in labels {
        let label = match l.label {
            PseudoClass::Class(c) => schema.name(c).unwrap_or("?").to_string(),
            PseudoClass::OutOfSchema => "OOS".to_string(),
        };
        let source = match l.source {
            LabelSource::Teacher => "teacher",
            LabelSource::Remote => "remote",
            LabelSource::Simulated => "simulated",
        };
        let raw = l.raw_response.as_deref().unwrap_or("").replace(['\t', '\n', '\r'], " ");
        out.push_str(&format!("{}\t{label}\t{}\t{source}\t{raw}\n", l.example_id, l.confidence));
    }
    out
}

pub fn render_bins_tsv(bins: &[ReliabilityBin]) -> String {
    let mut out = String::from("lower\tupper\tcount\tmean_confidence\taccuracy\n");
    for b in bins {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", b.lower, b.upper, b.count, b.mean_confidence, b.accuracy));
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e))
}
