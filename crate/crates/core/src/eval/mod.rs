//! Scoring explanations: recall against ground-truth edges, removal curves
//! and their area, and the method by dataset benchmark grid.

mod report;

pub use report::{EvalReport, ReportRow, TargetRecord};

use std::collections::BTreeSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::exec::{substream, Exec};
use crate::explain::{
    explain_subject, top_k_edges, EdgeModel, LimeConfig, Method, MethodConfig, Scope, Subject,
};
use crate::graph::{EdgeId, EdgeWeights};
use crate::models::{predictions, task_labels, LocalView, Model, Target, Task};

/// Fraction of `ground_truth` among the `k` highest-scoring edges.
pub fn recall_at_k(importance: &[f64], ground_truth: &[EdgeId], k: usize) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::arg("recall needs a nonempty ground-truth edge set"));
    }
    if k == 0 {
        return Err(Error::arg("recall needs k >= 1"));
    }
    let truth: BTreeSet<EdgeId> = ground_truth.iter().copied().collect();
    let hits = top_k_edges(importance, k)
        .iter()
        .filter(|e| truth.contains(e))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean and standard deviation of the recall of `k` edges drawn uniformly
/// without replacement from `num_edges`, `truth` of which are ground truth.
pub fn random_recall_moments(num_edges: usize, truth: usize, k: usize) -> (f64, f64) {
    let (n, g) = (num_edges as f64, truth as f64);
    let k = k.min(num_edges) as f64;
    let mean_hits = k * g / n;
    let var_hits = if num_edges > 1 {
        k * (g / n) * (1.0 - g / n) * (n - k) / (n - 1.0)
    } else {
        0.0
    };
    (mean_hits / g, var_hits.sqrt() / g)
}

/// `y_0..y_k`: the model output with the `j` highest-scoring edges set to
/// weight 0. `importance` is indexed like the model's edges.
pub fn removal_curve(model: &dyn EdgeModel, importance: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = model.num_edges();
    check_curve_args(n, importance.len(), k)?;
    let top = top_k_edges(importance, k);
    (0..=k)
        .map(|j| model.output(&EdgeWeights::with_removed(n, &top[..j])))
        .collect()
}

/// [`removal_curve`] for a subject, with `importance` over the full graph.
/// Top edges outside the subject's receptive field change nothing.
pub fn removal_curve_for(subject: &Subject<'_>, importance: &[f64], k: usize) -> Result<Vec<f64>> {
    check_curve_args(subject.full_graph().num_edges(), importance.len(), k)?;
    let n = subject.num_edges();
    let top = top_k_edges(importance, k);
    (0..=k)
        .map(|j| subject.output(&EdgeWeights::with_removed(n, &subject.to_local(&top[..j]))))
        .collect()
}

fn check_curve_args(num_edges: usize, scores: usize, k: usize) -> Result<()> {
    if scores != num_edges {
        return Err(Error::arg(format!(
            "{scores} scores for a graph with {num_edges} edges"
        )));
    }
    if k == 0 {
        return Err(Error::arg("removal curve needs k >= 1"));
    }
    if num_edges < k {
        return Err(Error::arg(format!(
            "cannot remove {k} edges from a graph with {num_edges}"
        )));
    }
    Ok(())
}

/// Trapezoidal area under the cumulative drop `y_0 - y_j`.
pub fn auc_edge(curve: &[f64]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::arg("AUC needs a curve with at least two points"));
    }
    let y0 = curve[0];
    Ok(curve
        .windows(2)
        .map(|w| ((y0 - w[0]) + (y0 - w[1])) / 2.0)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Recall,
    Auc,
}

impl Metric {
    pub fn label(self, k: usize) -> String {
        match self {
            Metric::Recall => format!("recall@{k}"),
            Metric::Auc => format!("auc@{k}"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recall" => Ok(Metric::Recall),
            "auc" => Ok(Metric::Auc),
            _ => Err(Error::arg(format!(
                "unknown metric {s:?} (expected recall or auc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub metric: Metric,
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Targets per dataset. `None` keeps every eligible target for recall
    /// and samples 100 for AUC.
    pub max_targets: Option<usize>,
    pub scope: Scope,
    /// LIME settings; the seed is replaced per target.
    pub lime: LimeConfig,
    /// Fill the wall-time column. Off by default so reports are
    /// byte-reproducible.
    pub wall_time: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            methods: Method::ALL.to_vec(),
            metric: Metric::Recall,
            k: 5,
            seeds: vec![0],
            max_targets: None,
            scope: Scope::Receptive,
            lime: LimeConfig::default(),
            wall_time: false,
        }
    }
}

pub const DEFAULT_AUC_TARGETS: usize = 100;

/// One trained model and the dataset it is scored on.
#[derive(Debug, Clone, Copy)]
pub struct BenchEntry<'a> {
    pub model: &'a Model,
    pub data: &'a LabeledDataset,
    /// For graph tasks, restricts targets to these graphs (the test split).
    pub test_indices: Option<&'a [usize]>,
}

/// Target id (node or graph index) and the scalar explained there.
pub fn select_targets(
    entry: &BenchEntry<'_>,
    cfg: &BenchmarkConfig,
    index: usize,
    seed: u64,
) -> Result<Vec<(usize, Target)>> {
    let data = entry.data;
    let model = entry.model;
    let in_split = |i: usize| match (data.task, entry.test_indices) {
        (Task::GraphClassification, Some(test)) => test.binary_search(&i).is_ok(),
        _ => true,
    };
    let mut chosen: Vec<(usize, Target)> = match cfg.metric {
        Metric::Recall => {
            let labels = task_labels(data)?;
            let predicted = predictions(model, data)?;
            data.ground_truth
                .iter()
                .filter(|(&i, gt)| !gt.is_empty() && in_split(i))
                .filter(|(&i, _)| match data.task {
                    // House nodes the model classifies correctly.
                    Task::NodeClassification => labels[i] != 0 && predicted[i] == labels[i],
                    Task::GraphClassification => true,
                })
                .map(|(&i, _)| (i, site(data.task, i).with_class(labels[i])))
                .collect()
        }
        Metric::Auc => match data.task {
            Task::NodeClassification => {
                let g = &data.graphs[0];
                let mut out = Vec::new();
                for v in 0..g.num_nodes() {
                    if LocalView::around(g, v, model.steps())?.edges.len() >= cfg.k {
                        out.push((v, Target::node(v)));
                    }
                }
                out
            }
            Task::GraphClassification => (0..data.graphs.len())
                .filter(|&i| in_split(i) && data.graphs[i].num_edges() >= cfg.k)
                .map(|i| (i, Target::graph()))
                .collect(),
        },
    };
    let cap = cfg.max_targets.unwrap_or(match cfg.metric {
        Metric::Recall => usize::MAX,
        Metric::Auc => DEFAULT_AUC_TARGETS,
    });
    if chosen.len() > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, index as u64));
        let mut keep = rand::seq::index::sample(&mut rng, chosen.len(), cap).into_vec();
        keep.sort_unstable();
        chosen = keep.into_iter().map(|i| chosen[i]).collect();
    }
    if chosen.is_empty() {
        return Err(Error::arg(format!(
            "dataset {} has no eligible targets for {}",
            data.name,
            cfg.metric.label(cfg.k)
        )));
    }
    Ok(chosen)
}

fn site(task: Task, i: usize) -> Target {
    match task {
        Task::NodeClassification => Target::node(i),
        Task::GraphClassification => Target::graph(),
    }
}

/// Scores every method on a seeded target sample of every dataset.
///
/// Targets run through `exec` in parallel; each derives its seed from
/// `(seed, dataset index, target index)`, so the report does not depend on
/// the number of workers.
pub fn run_benchmark(
    entries: &[BenchEntry<'_>],
    cfg: &BenchmarkConfig,
    exec: &Exec,
) -> Result<EvalReport> {
    validate(entries, cfg)?;
    let mut report = EvalReport::default();
    for &seed in &cfg.seeds {
        for (d, entry) in entries.iter().enumerate() {
            let data = entry.data;
            let targets = select_targets(entry, cfg, d, seed)?;
            let dataset_seed = substream(seed, d as u64);
            let cells = exec.try_map(targets.len(), |j| {
                let (id, target) = targets[j];
                run_cell(entry, cfg, id, target, substream(dataset_seed, j as u64))
            })?;
            for (m, &method) in cfg.methods.iter().enumerate() {
                let results: Vec<&CellResult> = cells.iter().map(|c| &c[m]).collect();
                let count = results.len() as f64;
                report.rows.push(ReportRow {
                    method,
                    dataset: data.name.clone(),
                    task: data.task,
                    metric: cfg.metric.label(cfg.k),
                    value: results.iter().map(|r| r.value).sum::<f64>() / count,
                    seed,
                    forward_passes: results.iter().map(|r| r.forward_passes as f64).sum::<f64>()
                        / count,
                    wall_time_ms: cfg
                        .wall_time
                        .then(|| results.iter().map(|r| r.wall_time_ms).sum::<f64>() / count),
                });
                for (&(id, _), r) in targets.iter().zip(&results) {
                    report.details.push(TargetRecord {
                        method,
                        dataset: data.name.clone(),
                        seed,
                        target: id,
                        value: r.value,
                        forward_passes: r.forward_passes,
                    });
                }
            }
        }
    }
    Ok(report)
}

fn validate(entries: &[BenchEntry<'_>], cfg: &BenchmarkConfig) -> Result<()> {
    if cfg.methods.is_empty() {
        return Err(Error::arg("benchmark needs at least one method"));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::arg("benchmark needs at least one seed"));
    }
    if cfg.k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if cfg.max_targets == Some(0) {
        return Err(Error::arg("max targets must be at least 1"));
    }
    cfg.lime.validate()?;
    let distinct = |n: usize, set: usize, what: &str| {
        if n == set {
            Ok(())
        } else {
            Err(Error::arg(format!("duplicate {what} in benchmark")))
        }
    };
    distinct(
        cfg.methods.len(),
        cfg.methods.iter().collect::<BTreeSet<_>>().len(),
        "methods",
    )?;
    distinct(
        cfg.seeds.len(),
        cfg.seeds.iter().collect::<BTreeSet<_>>().len(),
        "seeds",
    )?;
    let names: BTreeSet<&str> = entries.iter().map(|e| e.data.name.as_str()).collect();
    distinct(entries.len(), names.len(), "dataset names")?;
    for e in entries {
        if e.model.task() != e.data.task {
            return Err(Error::TaskMismatch(format!(
                "{} model ({}) cannot be evaluated on {} dataset {}",
                e.model.architecture(),
                e.model.task(),
                e.data.task,
                e.data.name
            )));
        }
    }
    Ok(())
}

struct CellResult {
    value: f64,
    forward_passes: usize,
    wall_time_ms: f64,
}

fn run_cell(
    entry: &BenchEntry<'_>,
    cfg: &BenchmarkConfig,
    id: usize,
    target: Target,
    seed: u64,
) -> Result<Vec<CellResult>> {
    let g = entry.data.graph_for(id);
    let subject = Subject::with_scope(entry.model, g, target, cfg.scope)?;
    let inner = Exec::sequential();
    cfg.methods
        .iter()
        .map(|&method| {
            let method_cfg = match method {
                Method::Lime => MethodConfig::Lime(LimeConfig {
                    seed,
                    ..cfg.lime.clone()
                }),
                other => MethodConfig::default_for(other, seed),
            };
            let start = Instant::now();
            let explanation = explain_subject(&subject, &method_cfg, &inner)?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let value = match cfg.metric {
                Metric::Recall => {
                    let gt = entry
                        .data
                        .ground_truth
                        .get(&id)
                        .map_or(&[][..], Vec::as_slice);
                    recall_at_k(&explanation.importance, gt, cfg.k)?
                }
                Metric::Auc => auc_edge(&removal_curve_for(
                    &subject,
                    &explanation.importance,
                    cfg.k,
                )?)?,
            };
            Ok(CellResult {
                value,
                forward_passes: explanation.forward_passes,
                wall_time_ms,
            })
        })
        .collect()
}
