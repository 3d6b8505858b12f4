use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::Method;
use crate::models::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub dataset: String,
    pub task: Task,
    pub metric: String,
    /// Mean over targets.
    pub value: f64,
    pub seed: u64,
    /// Mean forward passes per target.
    pub forward_passes: f64,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub method: Method,
    pub dataset: String,
    pub seed: u64,
    /// Node id or graph index.
    pub target: usize,
    pub value: f64,
    pub forward_passes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub details: Vec<TargetRecord>,
}

const HEADER: &str = "method,dataset,task,metric,value,seed,forward_passes,wall_time_ms";

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let wall = r
                .wall_time_ms
                .map(|t| format!("{t:.3}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.method, r.dataset, r.task, r.metric, r.value, r.seed, r.forward_passes, wall
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn details_csv(&self) -> String {
        let mut out = String::from("method,dataset,seed,target,value,forward_passes\n");
        for d in &self.details {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                d.method, d.dataset, d.seed, d.target, d.value, d.forward_passes
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Value of one row, averaged over seeds.
    pub fn mean(&self, method: Method, dataset: &str) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.dataset == dataset)
            .map(|r| r.value)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Methods as rows and datasets as columns, values averaged over seeds.
    pub fn summary_table(&self) -> String {
        let mut methods: Vec<Method> = Vec::new();
        let mut datasets: Vec<&str> = Vec::new();
        let mut metrics: BTreeMap<&str, ()> = BTreeMap::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
            if !datasets.contains(&r.dataset.as_str()) {
                datasets.push(&r.dataset);
            }
            metrics.insert(&r.metric, ());
        }
        let metric = metrics.keys().copied().collect::<Vec<_>>().join("/");
        let width = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(8);
        let mut out = format!("{metric:<10}");
        for d in &datasets {
            write!(out, " {d:>width$}").expect("writing to a string");
        }
        out.push('\n');
        for &m in &methods {
            write!(out, "{:<10}", m.name()).expect("writing to a string");
            for d in &datasets {
                match self.mean(m, d) {
                    Some(v) => write!(out, " {v:>width$.3}"),
                    None => write!(out, " {:>width$}", "-"),
                }
                .expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_summary(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(self.summary_table().as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    }
}
