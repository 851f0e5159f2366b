//! Grid execution: events × budgets × methods × seeds on a worker pool, with a
//! JSONL manifest that makes interrupted grids resumable.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use crisis_ssl_core::corpus::{make_split_plan, EventCorpus, LabelSchema};
use crisis_ssl_core::metrics::MetricsReport;
use crisis_ssl_core::oracle::{annotate_simulated, annotate_teacher, PseudoLabel};
use crisis_ssl_core::strategies::{fit, run_strategy, run_upper_bound, RunRecord, RunSettings, SslTask, StrategyId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::AnnotationCache;
use crate::config::{ExperimentConfig, Method, OracleKind};
use crate::error::{Error, Result};
use crate::io;
use crate::remote::{annotate_remote, AnnotationRequest};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const RUNS_DIR: &str = "runs";

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub event: String,
    pub budget: usize,
    pub method: Method,
    pub seed: u64,
}

impl RunKey {
    /// File-name-safe identifier.
    pub fn id(&self) -> String {
        format!("{}__k{}__{}__s{}", self.event, self.budget, self.method.key(), self.seed)
    }
}

/// Quality of the oracle labels a run consumed, measured against D_U gold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub labels: usize,
    pub oos: usize,
    /// Fraction of all labels (OOS counted wrong) that equal gold.
    pub accuracy: f64,
}

/// Everything persisted for a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub key: RunKey,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub oracle: Option<OracleSummary>,
    pub record: RunRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One manifest line. The last line for a run id wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(flatten)]
    pub key: RunKey,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Result file relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Execute at most this many pending runs, then stop.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    /// Successful runs in grid order, including ones finished by earlier invocations.
    pub results: Vec<RunResult>,
    pub failures: Vec<(RunKey, String)>,
    /// Runs already completed according to the manifest.
    pub resumed: usize,
    pub executed: usize,
    /// Runs left pending because of `RunOptions::limit`.
    pub remaining: usize,
}

/// Every grid cell, in event, budget, method, seed order.
pub fn grid(config: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for event in &config.events {
        for &budget in &config.budgets {
            for &method in &config.methods {
                for &seed in &config.seeds {
                    keys.push(RunKey { event: event.name.clone(), budget, method, seed });
                }
            }
        }
    }
    keys
}

/// Latest manifest entry per run id; unreadable lines are skipped with a warning.
pub fn read_manifest(output_dir: &Path) -> Result<BTreeMap<String, ManifestEntry>> {
    let path = output_dir.join(MANIFEST_FILE);
    let mut entries = BTreeMap::new();
    if !path.exists() {
        return Ok(entries);
    }
    for (i, line) in io::read_text(&path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ManifestEntry>(line) {
            Ok(entry) => {
                entries.insert(entry.id.clone(), entry);
            }
            Err(e) => log::warn!("{}:{}: skipping unreadable manifest line: {e}", path.display(), i + 1),
        }
    }
    Ok(entries)
}

/// Successful results reachable from the manifest, in manifest-id order.
pub fn load_results(output_dir: &Path) -> Result<Vec<RunResult>> {
    let mut results = Vec::new();
    for entry in read_manifest(output_dir)?.into_values() {
        if let (RunStatus::Ok, Some(rel)) = (entry.status, &entry.result) {
            results.push(io::read_json(&output_dir.join(rel))?);
        }
    }
    Ok(results)
}

/// Oracle labels shared by every run of an event (remote annotation only).
type EventLabels = HashMap<String, PseudoLabel>;

struct Prepared {
    schema: LabelSchema,
    corpora: HashMap<String, EventCorpus>,
    remote: HashMap<String, EventLabels>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    run_experiment_with(config, &RunOptions::default())
}

/// Validate, load every corpus, then execute the pending grid cells. Completed
/// runs listed in the manifest are loaded instead of re-executed; failed runs
/// are retried. A single coordinator thread owns the manifest.
pub fn run_experiment_with(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentSummary> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out.join(RUNS_DIR)).map_err(|e| Error::io(out.join(RUNS_DIR), e))?;
    let schema = config.label_schema()?;
    let mut corpora = HashMap::new();
    for event in &config.events {
        let corpus = event.load(&schema)?;
        if corpus.train.is_empty() {
            return Err(Error::Config(format!("event `{}` has no training examples", event.name)));
        }
        corpora.insert(event.name.clone(), corpus);
    }

    let manifest = read_manifest(out)?;
    let keys = grid(config);
    let mut done: HashMap<String, RunResult> = HashMap::new();
    for key in &keys {
        let id = key.id();
        if let Some(ManifestEntry { status: RunStatus::Ok, result: Some(rel), .. }) = manifest.get(&id) {
            match io::read_json::<RunResult>(&out.join(rel)) {
                Ok(result) => {
                    done.insert(id, result);
                }
                Err(e) => log::warn!("{id}: result unreadable ({e}); rerunning"),
            }
        }
    }
    let resumed = done.len();
    let mut pending: Vec<RunKey> = keys.iter().filter(|k| !done.contains_key(&k.id())).cloned().collect();
    let remaining = match options.limit {
        Some(limit) if limit < pending.len() => pending.split_off(limit).len(),
        _ => 0,
    };

    let remote_events: HashSet<&str> = if config.oracle.kind == OracleKind::Remote {
        pending.iter().filter(|k| k.method.needs_oracle()).map(|k| k.event.as_str()).collect()
    } else {
        HashSet::new()
    };
    let mut remote = HashMap::new();
    if !remote_events.is_empty() {
        let mut cache = AnnotationCache::open(&config.cache_path())?;
        for name in config.events.iter().map(|e| e.name.as_str()).filter(|n| remote_events.contains(n)) {
            remote.insert(name.to_string(), annotate_event(config, &schema, &corpora[name], &mut cache)?);
        }
    }
    let prepared = Prepared { schema, corpora, remote };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<(RunKey, std::result::Result<RunResult, String>)>();
    let manifest_path = out.join(MANIFEST_FILE);
    let (fresh, failures) = std::thread::scope(|scope| -> Result<_> {
        let coordinator = scope.spawn(move || coordinate(out, &manifest_path, rx));
        pool.install(|| {
            pending.par_iter().for_each_with(tx, |tx, key| {
                let outcome = execute(config, &prepared, key).map_err(|e| e.to_string());
                if let Err(e) = &outcome {
                    log::error!("{}: {e}", key.id());
                }
                let _ = tx.send((key.clone(), outcome));
            });
        });
        coordinator.join().expect("manifest coordinator panicked")
    })?;
    let executed = fresh.len() + failures.len();
    done.extend(fresh.into_iter().map(|r| (r.key.id(), r)));
    let results = keys.iter().filter_map(|k| done.remove(&k.id())).collect();
    let mut failures = failures;
    failures.sort();
    Ok(ExperimentSummary { results, failures, resumed, executed, remaining })
}

type Finished = (Vec<RunResult>, Vec<(RunKey, String)>);

fn coordinate(
    out: &Path,
    manifest_path: &PathBuf,
    rx: mpsc::Receiver<(RunKey, std::result::Result<RunResult, String>)>,
) -> Result<Finished> {
    let mut manifest =
        OpenOptions::new().create(true).append(true).open(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (key, outcome) in rx {
        let id = key.id();
        let entry = match outcome {
            Ok(result) => {
                let rel = format!("{RUNS_DIR}/{id}.json");
                io::write_json(&out.join(&rel), &result)?;
                results.push(result);
                ManifestEntry { id, key, status: RunStatus::Ok, error: None, result: Some(rel) }
            }
            Err(error) => {
                failures.push((key.clone(), error.clone()));
                ManifestEntry { id, key, status: RunStatus::Failed, error: Some(error), result: None }
            }
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| Error::format(manifest_path, e))?;
        line.push('\n');
        manifest
            .write_all(line.as_bytes())
            .and_then(|_| manifest.flush())
            .map_err(|e| Error::io(manifest_path, e))?;
    }
    Ok((results, failures))
}

/// Remote labels for every train and test example of an event.
fn annotate_event(
    config: &ExperimentConfig,
    schema: &LabelSchema,
    corpus: &EventCorpus,
    cache: &mut AnnotationCache,
) -> Result<EventLabels> {
    let batch: Vec<(String, String)> =
        corpus.train.iter().chain(&corpus.test).map(|ex| (ex.id.clone(), ex.text.clone())).collect();
    let request = AnnotationRequest {
        settings: config.oracle.remote.clone(),
        template: config.oracle.template(schema),
        schema: schema.clone(),
        batch,
    };
    let outcome = annotate_remote(&request, cache)?;
    log::info!(
        "{}: {} labels, {} cached, {} requests, {} failures",
        corpus.event_name,
        outcome.labels.len(),
        outcome.cache_hits,
        outcome.network_requests,
        outcome.failures.len()
    );
    io::write_json(
        &config.output_dir.join(format!("oracle-{}.json", corpus.event_name)),
        &serde_json::json!({
            "event": corpus.event_name,
            "labels": outcome.labels.len(),
            "cache_hits": outcome.cache_hits,
            "network_requests": outcome.network_requests,
            "failures": outcome.failures,
        }),
    )?;
    Ok(outcome.labels.into_iter().map(|l| (l.example_id.clone(), l)).collect())
}

fn settings_for(config: &ExperimentConfig, strategy: StrategyId, seed: u64) -> RunSettings {
    let mut settings =
        RunSettings::new(config.model.clone(), config.train.clone(), config.strategy_config(strategy), seed);
    settings.bins = config.bins;
    settings
}

/// Oracle labels for `examples` (`(id, gold)` pairs) under the configured oracle.
fn oracle_labels<'a>(
    config: &ExperimentConfig,
    prepared: &Prepared,
    key: &RunKey,
    task: &SslTask,
    examples: impl Iterator<Item = (&'a str, Option<usize>)>,
) -> Result<Vec<PseudoLabel>> {
    match config.oracle.kind {
        OracleKind::Simulated => {
            let profile = config.oracle.profile(prepared.schema.len(), key.seed)?;
            Ok(annotate_simulated(examples, &profile, &task.active_classes)?)
        }
        OracleKind::Remote => {
            let labels = &prepared.remote[&key.event];
            examples
                .map(|(id, _)| labels.get(id).cloned().ok_or_else(|| Error::Remote(format!("no annotation for `{id}`"))))
                .collect()
        }
        OracleKind::Teacher => unreachable!("teacher labels come from the supervised model"),
    }
}

fn summarize(labels: &[PseudoLabel], golds: impl Iterator<Item = Option<usize>>) -> OracleSummary {
    let correct = labels.iter().zip(golds).filter(|(l, g)| g.is_some() && l.class() == *g).count();
    OracleSummary {
        labels: labels.len(),
        oos: labels.iter().filter(|l| l.is_oos()).count(),
        accuracy: if labels.is_empty() { 0.0 } else { correct as f64 / labels.len() as f64 },
    }
}

fn execute(config: &ExperimentConfig, prepared: &Prepared, key: &RunKey) -> Result<RunResult> {
    let started = Instant::now();
    let corpus = &prepared.corpora[&key.event];
    let plan = make_split_plan(corpus, key.budget, key.seed)?;
    let task = SslTask::from_split(corpus, &plan, &config.featurizer)?;
    let (oracle, mut record) = match key.method {
        Method::UpperBound => (None, run_upper_bound(&task, &settings_for(config, StrategyId::Supervised, key.seed))?.record),
        Method::ZeroShot => zero_shot(config, prepared, key, &task)?,
        Method::Strategy(strategy) => {
            let settings = settings_for(config, strategy, key.seed);
            let labels = if strategy.needs_oracle_labels() {
                let unlabeled = task.unlabeled.iter().map(|p| (p.id.as_str(), p.gold));
                Some(match config.oracle.kind {
                    OracleKind::Teacher => {
                        let teacher = fit(&task, &settings, &task_labeled(&task), key.seed)?;
                        annotate_teacher(&teacher, task.unlabeled.iter().map(|p| (p.id.as_str(), &p.features)))?
                    }
                    _ => oracle_labels(config, prepared, key, &task, unlabeled)?,
                })
            } else {
                None
            };
            let summary = labels.as_ref().map(|l| summarize(l, task.unlabeled.iter().map(|p| p.gold)));
            (summary, run_strategy(&task, &settings, labels.as_deref())?.record)
        }
    };
    record.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(RunResult { key: key.clone(), n_labeled: plan.n_labeled(), n_unlabeled: plan.n_unlabeled(), oracle, record })
}

fn task_labeled(task: &SslTask) -> Vec<crisis_ssl_core::model::TrainExample> {
    task.labeled
        .iter()
        .map(|p| crisis_ssl_core::model::TrainExample::hard(p.features.clone(), p.label, task.class_count))
        .collect()
}

/// Oracle labels used directly as test predictions. OOS answers count as an
/// extra, never-correct class.
fn zero_shot(
    config: &ExperimentConfig,
    prepared: &Prepared,
    key: &RunKey,
    task: &SslTask,
) -> Result<(Option<OracleSummary>, RunRecord)> {
    let settings = settings_for(config, StrategyId::Supervised, key.seed);
    let mut notes = Vec::new();
    let labels = match config.oracle.kind {
        OracleKind::Teacher => {
            notes.push("teacher oracle: zero-shot predictions come from the supervised model".to_string());
            let teacher = fit(task, &settings, &task_labeled(task), key.seed)?;
            annotate_teacher(&teacher, task.test.iter().map(|p| (p.id.as_str(), &p.features)))?
        }
        _ => oracle_labels(config, prepared, key, task, task.test.iter().map(|p| (p.id.as_str(), Some(p.label))))?,
    };
    let summary = summarize(&labels, task.test.iter().map(|p| Some(p.label)));
    let test = if task.test.is_empty() {
        None
    } else {
        let oos = task.class_count;
        let preds: Vec<usize> = labels.iter().map(|l| l.class().unwrap_or(oos)).collect();
        let confs: Vec<f64> = labels.iter().map(|l| l.confidence).collect();
        let golds: Vec<usize> = task.test.iter().map(|p| p.label).collect();
        Some(MetricsReport::from_predictions(&preds, &confs, &golds, oos + 1, &task.active_classes, config.bins)?)
    };
    let record = RunRecord {
        config: settings.strategy,
        seed: key.seed,
        rounds: Vec::new(),
        val: None,
        test,
        wall_time_secs: 0.0,
        notes,
    };
    Ok((Some(summary), record))
}
