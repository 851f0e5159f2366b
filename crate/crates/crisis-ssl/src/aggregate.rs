//! Mean/std tables over events × seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::runner::RunResult;

/// Mean and standard deviation with the n − 1 denominator (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() < 2 { 0.0 } else { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) };
        Some(Self { mean, std: var.sqrt(), n: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub budget: usize,
    pub macro_f1: Stat,
    pub ece: Stat,
}

/// Rows are methods, columns budgets. `best_f1` / `best_ece` name the
/// highest-F1 and lowest-ECE method per budget, excluding the upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub cells: Vec<Cell>,
    pub best_f1: BTreeMap<usize, Method>,
    pub best_ece: BTreeMap<usize, Method>,
}

impl AggregateTable {
    pub fn cell(&self, method: Method, budget: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.budget == budget)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("aggregate tables always serialize")
    }

    /// Plain-text layout: the Macro-F1 block, then the ECE block. Best cells
    /// carry a `*`.
    pub fn render_text(&self) -> String {
        let label_width = self.methods.iter().map(|m| m.display_name().len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        for (title, best, pick) in [
            ("Macro-F1", &self.best_f1, (|c: &Cell| c.macro_f1) as fn(&Cell) -> Stat),
            ("ECE", &self.best_ece, |c: &Cell| c.ece),
        ] {
            let _ = write!(out, "{title:<label_width$}");
            for b in &self.budgets {
                let _ = write!(out, "  {:>15}", format!("{b} lb/cl"));
            }
            out.push('\n');
            for &m in &self.methods {
                let _ = write!(out, "{:<label_width$}", m.display_name());
                for &b in &self.budgets {
                    let text = match self.cell(m, b) {
                        Some(c) => {
                            let s = pick(c);
                            let star = if best.get(&b) == Some(&m) { "*" } else { " " };
                            format!("{:.3} ± {:.3}{star}", s.mean, s.std)
                        }
                        None => "-".to_string(),
                    };
                    let _ = write!(out, "  {text:>15}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

/// Pool test metrics per (method, budget) over every event and seed. Runs
/// without test metrics are left out. Methods appear in table order.
pub fn aggregate(results: &[RunResult]) -> AggregateTable {
    let mut methods: Vec<Method> = Vec::new();
    let mut budgets: Vec<usize> = Vec::new();
    let mut samples: BTreeMap<(Method, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in results {
        let Some(test) = &r.record.test else { continue };
        if !methods.contains(&r.key.method) {
            methods.push(r.key.method);
        }
        if !budgets.contains(&r.key.budget) {
            budgets.push(r.key.budget);
        }
        let entry = samples.entry((r.key.method, r.key.budget)).or_default();
        entry.0.push(test.macro_f1);
        entry.1.push(test.ece);
    }
    methods.sort_unstable();
    budgets.sort_unstable();
    let mut cells = Vec::new();
    for &m in &methods {
        for &b in &budgets {
            if let Some((f1, ece)) = samples.get(&(m, b)) {
                cells.push(Cell {
                    method: m,
                    budget: b,
                    macro_f1: Stat::of(f1).expect("non-empty"),
                    ece: Stat::of(ece).expect("non-empty"),
                });
            }
        }
    }
    let mut best_f1 = BTreeMap::new();
    let mut best_ece = BTreeMap::new();
    for &b in &budgets {
        let column = || cells.iter().filter(move |c| c.budget == b && c.method != Method::UpperBound);
        if let Some(c) = column().max_by(|x, y| x.macro_f1.mean.total_cmp(&y.macro_f1.mean).then(y.method.cmp(&x.method))) {
            best_f1.insert(b, c.method);
        }
        if let Some(c) = column().min_by(|x, y| x.ece.mean.total_cmp(&y.ece.mean).then(x.method.cmp(&y.method))) {
            best_ece.insert(b, c.method);
        }
    }
    AggregateTable { methods, budgets, cells, best_f1, best_ece }
}
