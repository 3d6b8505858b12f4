//! GCN and GGNN forward passes parameterized by edge weights, with optional
//! per-edge message tracing, plus training and checkpoints.

mod checkpoint;
mod gcn;
mod ggnn;
mod local;
mod train;

pub use checkpoint::Checkpoint;
pub use gcn::{gcn_propagation, normalized_adjacency, GcnModel};
pub use ggnn::GgnnModel;
pub use local::LocalView;
pub use train::{
    predictions, stratified_split, task_labels, train, ModelSpec, TrainConfig, TrainMetrics,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeWeights, Graph};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NodeClassification,
    GraphClassification,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::NodeClassification => "node-classification",
            Task::GraphClassification => "graph-classification",
        })
    }
}

/// Where the explained scalar is read: one node's logits or the graph's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Node(usize),
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassChoice {
    /// Argmax under all-ones edge weights, resolved once and then fixed.
    Predicted,
    Class(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub site: Site,
    pub class: ClassChoice,
}

impl Target {
    pub fn node(v: usize) -> Self {
        Target {
            site: Site::Node(v),
            class: ClassChoice::Predicted,
        }
    }

    pub fn graph() -> Self {
        Target {
            site: Site::Graph,
            class: ClassChoice::Predicted,
        }
    }

    pub fn with_class(mut self, class: usize) -> Self {
        self.class = ClassChoice::Class(class);
        self
    }

    /// The class id, if already fixed.
    pub fn class_id(&self) -> Option<usize> {
        match self.class {
            ClassChoice::Class(c) => Some(c),
            ClassChoice::Predicted => None,
        }
    }
}

/// One edge's contribution to one endpoint's aggregation at one step.
#[derive(Debug, Clone, Copy)]
pub struct TracedMessage<'t> {
    pub edge: EdgeId,
    pub src: usize,
    pub dst: usize,
    pub var: Var<'t>,
}

#[derive(Debug, Clone)]
pub struct TraceStep<'t> {
    /// `2 * |edges|` entries, grouped by destination node in ascending order.
    pub messages: Vec<TracedMessage<'t>>,
    /// Per-node aggregated incoming message (one row per node).
    pub aggregate: Var<'t>,
}

#[derive(Debug, Clone, Default)]
pub struct MessageTrace<'t> {
    pub steps: Vec<TraceStep<'t>>,
}

#[derive(Debug, Clone)]
pub struct Forward<'t> {
    /// Node logits (GCN, `N x C`) or graph logits (GGNN, `1 x C`).
    pub logits: Var<'t>,
    /// Final node representations.
    pub node_states: Var<'t>,
    pub trace: Option<MessageTrace<'t>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gcn(GcnModel),
    Ggnn(GgnnModel),
}

impl Model {
    pub fn task(&self) -> Task {
        match self {
            Model::Gcn(_) => Task::NodeClassification,
            Model::Ggnn(_) => Task::GraphClassification,
        }
    }

    pub fn architecture(&self) -> &'static str {
        match self {
            Model::Gcn(_) => "gcn",
            Model::Ggnn(_) => "ggnn",
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Model::Gcn(m) => m.num_classes(),
            Model::Ggnn(m) => m.num_classes(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Gcn(m) => m.dims()[0],
            Model::Ggnn(m) => m.input_dim(),
        }
    }

    /// Number of message-passing steps (GCN layers or GGNN steps).
    pub fn steps(&self) -> usize {
        match self {
            Model::Gcn(m) => m.num_layers(),
            Model::Ggnn(m) => m.steps(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Model::Gcn(m) => m.params(),
            Model::Ggnn(m) => m.params(),
        }
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Model::Gcn(m) => m.params_mut(),
            Model::Ggnn(m) => m.params_mut(),
        }
    }

    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> Vec<Var<'t>> {
        self.params()
            .into_iter()
            .map(|p| {
                if trainable {
                    tape.leaf(p.clone())
                } else {
                    tape.constant(p.clone())
                }
            })
            .collect()
    }

    /// Forward pass with parameters recorded as constants.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        g: &Graph,
        ew: &EdgeWeights,
        trace: bool,
    ) -> Result<Forward<'t>> {
        let params = self.bind(tape, false);
        self.forward_with(tape, &params, g, ew, trace)
    }

    pub fn forward_with<'t>(
        &self,
        tape: &'t Tape,
        params: &[Var<'t>],
        g: &Graph,
        ew: &EdgeWeights,
        trace: bool,
    ) -> Result<Forward<'t>> {
        ew.check_for(g)?;
        if g.feature_dim() != self.input_dim() {
            return Err(Error::Shape {
                op: "model input",
                left: (g.num_nodes(), g.feature_dim()),
                right: (g.num_nodes(), self.input_dim()),
            });
        }
        match self {
            Model::Gcn(m) => m.forward(tape, params, g, ew, trace),
            Model::Ggnn(m) => m.forward(tape, params, g, ew, trace),
        }
    }

    fn check_site(&self, g: &Graph, site: Site) -> Result<usize> {
        match (self.task(), site) {
            (Task::NodeClassification, Site::Node(v)) => {
                if v >= g.num_nodes() {
                    return Err(Error::NodeOutOfRange {
                        what: "target node",
                        index: v,
                        num_nodes: g.num_nodes(),
                    });
                }
                Ok(v)
            }
            (Task::GraphClassification, Site::Graph) => Ok(0),
            (task, site) => Err(Error::TaskMismatch(format!(
                "{} model ({task}) cannot be queried at {site:?}",
                self.architecture()
            ))),
        }
    }

    /// Fixes `ClassChoice::Predicted` to the argmax under all-ones weights.
    pub fn resolve_target(&self, g: &Graph, target: Target) -> Result<Target> {
        let row = self.check_site(g, target.site)?;
        let class = match target.class {
            ClassChoice::Class(c) => {
                if c >= self.num_classes() {
                    return Err(Error::arg(format!(
                        "class id {c} out of range for a {}-class model",
                        self.num_classes()
                    )));
                }
                c
            }
            ClassChoice::Predicted => {
                let tape = Tape::new();
                let fwd = self.forward(&tape, g, &EdgeWeights::ones(g.num_edges()), false)?;
                let logits = fwd.logits.value();
                argmax(logits.row(row))
            }
        };
        Ok(Target {
            site: target.site,
            class: ClassChoice::Class(class),
        })
    }

    /// Pre-softmax logit of the target class at the target site, on the tape.
    pub fn predict_scalar<'t>(
        &self,
        tape: &'t Tape,
        g: &Graph,
        ew: &EdgeWeights,
        target: Target,
    ) -> Result<Var<'t>> {
        let resolved = self.resolve_target(g, target)?;
        let row = self.check_site(g, resolved.site)?;
        let class = resolved.class_id().expect("resolved");
        let fwd = self.forward(tape, g, ew, false)?;
        fwd.logits.element(row, class)
    }

    /// Predicted class per node (GCN) or for the graph (GGNN, single entry).
    pub fn predict(&self, g: &Graph) -> Result<Vec<usize>> {
        let tape = Tape::new();
        let fwd = self.forward(&tape, g, &EdgeWeights::ones(g.num_edges()), false)?;
        let logits = fwd.logits.value();
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Glorot-uniform initialization.
pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-a..a))
}

/// Builds per-direction message nodes for every edge, grouped by destination
/// in ascending order and by source within a destination. The returned list
/// matches the row order of the propagation matrices used by the untraced
/// path, so both paths sum identical terms in identical order.
pub(crate) fn trace_messages<'t>(
    g: &Graph,
    source: Var<'t>,
    coef: impl Fn(usize, usize, EdgeId) -> f64,
) -> Result<Vec<TracedMessage<'t>>> {
    let mut out = Vec::with_capacity(2 * g.num_edges());
    for v in 0..g.num_nodes() {
        for &(w, e) in g.adj(v) {
            let var = source.message(w, coef(v, w, e))?;
            out.push(TracedMessage {
                edge: e,
                src: w,
                dst: v,
                var,
            });
        }
    }
    Ok(out)
}
