//! Edge-importance methods. Every method maps a model, a graph and a target
//! scalar to one signed score per edge; positive scores mark edges that push
//! the target logit up.

mod gradient;
mod lasso;
mod lime;
mod probe;
mod removal;

pub use gradient::{explain_gradcam, explain_saliency};
pub use lasso::{fit_lasso, soft_threshold, LassoFit, LASSO_MAX_SWEEPS, LASSO_TOLERANCE};
pub use lime::{
    explain_lime, kernel_weight, perturb_edges, LimeConfig, LimeFeatures, Perturbation,
};
pub use probe::LinearProbe;
pub use removal::{explain_random, explain_removal};

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{EdgeId, EdgeWeights, Graph};
use crate::models::{LocalView, MessageTrace, Model, Site, Target};
use crate::tensor::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lime,
    Saliency,
    Gradcam,
    Removal,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lime,
        Method::Saliency,
        Method::Gradcam,
        Method::Removal,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lime => "lime",
            Method::Saliency => "saliency",
            Method::Gradcam => "gradcam",
            Method::Removal => "removal",
            Method::Random => "random",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::arg(format!(
                    "unknown method {s:?} (expected lime, saliency, gradcam, removal or random)"
                ))
            })
    }
}

/// Scalar function of per-edge weights that an explainer can probe.
///
/// `output` and `traced` each count as one forward pass.
pub trait EdgeModel: Sync {
    fn num_edges(&self) -> usize;

    fn num_nodes(&self) -> usize;

    fn output(&self, ew: &EdgeWeights) -> Result<f64>;

    /// One forward with all-ones weights and message tracing; returns the
    /// target scalar and the trace.
    fn traced<'t>(&self, tape: &'t Tape) -> Result<(Var<'t>, MessageTrace<'t>)>;

    fn forward_passes(&self) -> usize;
}

/// Which edges an explainer perturbs for a node target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Only the target's receptive field; other edges score 0.
    #[default]
    Receptive,
    Full,
}

/// A trained model bound to one graph and one resolved target.
///
/// With [`Scope::Receptive`], node targets are evaluated on the target's
/// [`LocalView`]. Edges outside it cannot change the target logit, so they
/// get zero importance without being evaluated.
#[derive(Debug)]
pub struct Subject<'a> {
    model: &'a Model,
    local: Option<LocalView>,
    full: &'a Graph,
    target: Target,
    row: usize,
    class: usize,
    counter: AtomicUsize,
}

impl<'a> Subject<'a> {
    pub fn new(model: &'a Model, g: &'a Graph, target: Target) -> Result<Self> {
        Subject::with_scope(model, g, target, Scope::Receptive)
    }

    pub fn with_scope(
        model: &'a Model,
        g: &'a Graph,
        target: Target,
        scope: Scope,
    ) -> Result<Self> {
        let target = model.resolve_target(g, target)?;
        let class = target.class_id().expect("resolved");
        let (local, row) = match (target.site, scope) {
            (Site::Node(v), Scope::Full) => (None, v),
            (Site::Node(v), Scope::Receptive) => {
                let view = LocalView::around(g, v, model.steps())?;
                let row = view.center;
                (Some(view), row)
            }
            (Site::Graph, _) => (None, 0),
        };
        Ok(Subject {
            model,
            local,
            full: g,
            target,
            row,
            class,
            counter: AtomicUsize::new(0),
        })
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn graph(&self) -> &Graph {
        self.local.as_ref().map_or(self.full, |v| &v.graph)
    }

    pub fn full_graph(&self) -> &Graph {
        self.full
    }

    pub fn local_view(&self) -> Option<&LocalView> {
        self.local.as_ref()
    }

    /// Local per-edge scores to a vector over the full graph's edges.
    pub fn to_global(&self, local: &[f64]) -> Vec<f64> {
        match &self.local {
            Some(view) => view.expand(local, self.full.num_edges()),
            None => local.to_vec(),
        }
    }

    /// Full-graph edge ids to the ids this subject evaluates.
    pub fn to_local(&self, global: &[EdgeId]) -> Vec<EdgeId> {
        match &self.local {
            Some(view) => view.localize_edges(global),
            None => global.to_vec(),
        }
    }

    pub fn reset_counter(&self) {
        self.counter.store(0, Ordering::Relaxed);
    }
}

impl EdgeModel for Subject<'_> {
    fn num_edges(&self) -> usize {
        self.graph().num_edges()
    }

    fn num_nodes(&self) -> usize {
        self.graph().num_nodes()
    }

    fn output(&self, ew: &EdgeWeights) -> Result<f64> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let tape = Tape::new();
        let fwd = self.model.forward(&tape, self.graph(), ew, false)?;
        let y = fwd.logits.value().get(self.row, self.class);
        Ok(y)
    }

    fn traced<'t>(&self, tape: &'t Tape) -> Result<(Var<'t>, MessageTrace<'t>)> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let g = self.graph();
        // Parameters go on the tape as leaves so gradients reach the messages.
        let params = self.model.bind(tape, true);
        let fwd =
            self.model
                .forward_with(tape, &params, g, &EdgeWeights::ones(g.num_edges()), true)?;
        let y = fwd.logits.element(self.row, self.class)?;
        Ok((y, fwd.trace.expect("traced forward")))
    }

    fn forward_passes(&self) -> usize {
        self.counter.load(Ordering::Relaxed)
    }
}

/// Method plus its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Lime(LimeConfig),
    Saliency,
    Gradcam,
    Removal,
    Random { seed: u64 },
}

impl MethodConfig {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Lime(_) => Method::Lime,
            MethodConfig::Saliency => Method::Saliency,
            MethodConfig::Gradcam => Method::Gradcam,
            MethodConfig::Removal => Method::Removal,
            MethodConfig::Random { .. } => Method::Random,
        }
    }

    /// Default settings for `method`, seeded where the method is random.
    pub fn default_for(method: Method, seed: u64) -> Self {
        match method {
            Method::Lime => MethodConfig::Lime(LimeConfig {
                seed,
                ..LimeConfig::default()
            }),
            Method::Saliency => MethodConfig::Saliency,
            Method::Gradcam => MethodConfig::Gradcam,
            Method::Removal => MethodConfig::Removal,
            Method::Random => MethodConfig::Random { seed },
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            MethodConfig::Lime(c) => c.seed,
            MethodConfig::Random { seed } => *seed,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    #[serde(default)]
    pub dataset: String,
    #[serde(default)]
    pub graph: String,
    pub target: Target,
    pub seed: u64,
    /// Settings actually used, with derived defaults filled in.
    pub config: serde_json::Value,
    pub forward_passes: usize,
    /// Indexed by edge id of the explained graph.
    pub importance: Vec<f64>,
}

impl Explanation {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// CSV with columns `edge_id,u,v,importance`.
    pub fn write_csv(&self, g: &Graph, out: &mut impl Write) -> Result<()> {
        if g.num_edges() != self.importance.len() {
            return Err(Error::arg(format!(
                "explanation has {} scores but graph {} has {} edges",
                self.importance.len(),
                g.name(),
                g.num_edges()
            )));
        }
        let io = |e| Error::io("<csv>", e);
        writeln!(out, "edge_id,u,v,importance").map_err(io)?;
        for (id, (&(u, v), imp)) in g.edges().iter().zip(&self.importance).enumerate() {
            writeln!(out, "{id},{u},{v},{imp}").map_err(io)?;
        }
        Ok(())
    }

    pub fn top_k(&self, k: usize) -> Vec<EdgeId> {
        top_k_edges(&self.importance, k)
    }
}

/// The `k` highest-scoring edges, ties broken by ascending id.
pub fn top_k_edges(importance: &[f64], k: usize) -> Vec<EdgeId> {
    let mut ids: Vec<EdgeId> = (0..importance.len()).collect();
    ids.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    ids.truncate(k);
    ids
}

/// Runs one method on one target.
pub fn explain(
    model: &Model,
    g: &Graph,
    target: Target,
    cfg: &MethodConfig,
    scope: Scope,
    exec: &Exec,
) -> Result<Explanation> {
    if let MethodConfig::Random { seed } = cfg {
        let target = model.resolve_target(g, target)?;
        return Ok(Explanation {
            method: Method::Random,
            dataset: String::new(),
            graph: g.name().to_string(),
            target,
            seed: *seed,
            config: serde_json::to_value(cfg).expect("serializable"),
            forward_passes: 0,
            importance: explain_random(g.num_edges(), *seed),
        });
    }
    let subject = Subject::with_scope(model, g, target, scope)?;
    explain_subject(&subject, cfg, exec)
}

/// Runs one method on an already bound subject.
pub fn explain_subject(
    subject: &Subject<'_>,
    cfg: &MethodConfig,
    exec: &Exec,
) -> Result<Explanation> {
    subject.reset_counter();
    let (local, config) = match cfg {
        MethodConfig::Lime(c) => {
            let resolved = c.resolved(subject.num_edges());
            (
                explain_lime(subject, &resolved, exec)?,
                MethodConfig::Lime(resolved),
            )
        }
        MethodConfig::Saliency => (explain_saliency(subject)?, cfg.clone()),
        MethodConfig::Gradcam => (explain_gradcam(subject)?, cfg.clone()),
        MethodConfig::Removal => (explain_removal(subject, exec)?, cfg.clone()),
        MethodConfig::Random { seed } => {
            let n = subject.full_graph().num_edges();
            return Ok(Explanation {
                method: Method::Random,
                dataset: String::new(),
                graph: subject.full_graph().name().to_string(),
                target: subject.target(),
                seed: *seed,
                config: serde_json::to_value(cfg).expect("serializable"),
                forward_passes: 0,
                importance: explain_random(n, *seed),
            });
        }
    };
    Ok(Explanation {
        method: cfg.method(),
        dataset: String::new(),
        graph: subject.full_graph().name().to_string(),
        target: subject.target(),
        seed: cfg.seed(),
        config: serde_json::to_value(&config).expect("serializable"),
        forward_passes: subject.forward_passes(),
        importance: subject.to_global(&local),
    })
}
