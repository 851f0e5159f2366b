//! Per-event CSV exports: one methods × events grid per budget, and the
//! LG-CoTrain vs SG-CoTrain ablation.

use std::collections::BTreeMap;

use crisis_ssl_core::strategies::StrategyId;

use crate::config::Method;
use crate::error::{Error, Result};
use crate::runner::RunResult;

/// Seed-mean test Macro-F1 per (method, event) for one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGrid {
    pub budget: usize,
    pub methods: Vec<Method>,
    pub events: Vec<String>,
    /// `cells[m][e]`; `None` when no run of that pair produced test metrics.
    pub cells: Vec<Vec<Option<f64>>>,
}

fn seed_means(results: &[RunResult]) -> BTreeMap<(usize, Method, String), f64> {
    let mut sums: BTreeMap<(usize, Method, String), (f64, usize)> = BTreeMap::new();
    for r in results {
        if let Some(test) = &r.record.test {
            let e = sums.entry((r.key.budget, r.key.method, r.key.event.clone())).or_default();
            e.0 += test.macro_f1;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// One grid per budget, ascending. Methods appear in table order, events in first-seen order.
pub fn event_grids(results: &[RunResult]) -> Vec<EventGrid> {
    let means = seed_means(results);
    let mut methods = first_seen(results.iter().map(|r| r.key.method));
    methods.sort_unstable();
    let events = first_seen(results.iter().map(|r| r.key.event.clone()));
    let mut budgets = first_seen(results.iter().map(|r| r.key.budget));
    budgets.sort_unstable();
    budgets
        .into_iter()
        .map(|budget| EventGrid {
            budget,
            cells: methods
                .iter()
                .map(|&m| events.iter().map(|e| means.get(&(budget, m, e.clone())).copied()).collect())
                .collect(),
            methods: methods.clone(),
            events: events.clone(),
        })
        .collect()
}

fn fmt3(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

impl EventGrid {
    /// Header `method,<event>...`; one row per method; empty cells are blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for e in &self.events {
            out.push(',');
            out.push_str(e);
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&self.cells) {
            out.push_str(m.display_name());
            for &v in row {
                out.push(',');
                out.push_str(&fmt3(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Parsed CSV grid: column names after the first, then `(row label, cells)`.
pub type ParsedGrid = (Vec<String>, Vec<(String, Vec<Option<f64>>)>);

/// Parse a CSV written by [`EventGrid::to_csv`] or [`ablation_csv`].
pub fn parse_grid_csv(text: &str) -> Result<ParsedGrid> {
    let bad = |line: usize, msg: String| Error::Format { path: "<csv>".into(), message: format!("line {line}: {msg}") };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
    let columns: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default().to_string();
        let cells = fields
            .map(|f| if f.is_empty() { Ok(None) } else { f.parse::<f64>().map(Some) })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(i + 2, e.to_string()))?;
        if cells.len() != columns.len() {
            return Err(bad(i + 2, format!("expected {} values, found {}", columns.len(), cells.len())));
        }
        rows.push((label, cells));
    }
    Ok((columns, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub event: String,
    pub lg: f64,
    pub sg: f64,
    pub delta: f64,
}

/// Per-event seed-mean LG-CoTrain and SG-CoTrain Macro-F1 at `budget`, for
/// events where both ran.
pub fn ablation(results: &[RunResult], budget: usize) -> Vec<AblationRow> {
    let means = seed_means(results);
    let lg = Method::Strategy(StrategyId::LgCotrain);
    let sg = Method::Strategy(StrategyId::SgCotrain);
    first_seen(results.iter().map(|r| r.key.event.clone()))
        .into_iter()
        .filter_map(|event| {
            let a = *means.get(&(budget, lg, event.clone()))?;
            let b = *means.get(&(budget, sg, event.clone()))?;
            Some(AblationRow { event, lg: a, sg: b, delta: a - b })
        })
        .collect()
}

/// `event,LG-CoTrain,SG-CoTrain,Delta` rows plus a final `Average` row.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("event,LG-CoTrain,SG-CoTrain,Delta\n");
    for r in rows {
        out.push_str(&format!("{},{:.3},{:.3},{:.3}\n", r.event, r.lg, r.sg, r.delta));
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean = |f: fn(&AblationRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        out.push_str(&format!(
            "Average,{:.3},{:.3},{:.3}\n",
            mean(|r| r.lg),
            mean(|r| r.sg),
            mean(|r| r.delta)
        ));
    }
    out
}
