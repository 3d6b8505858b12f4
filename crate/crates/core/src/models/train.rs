use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GcnModel, GgnnModel, Model, Task};
use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::EdgeWeights;
use crate::tensor::{Tape, Tensor, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "lowercase")]
pub enum ModelSpec {
    Gcn { hidden: Vec<usize> },
    Ggnn { hidden: usize, steps: usize },
}

impl ModelSpec {
    pub fn default_gcn() -> Self {
        ModelSpec::Gcn { hidden: vec![32] }
    }

    pub fn default_ggnn() -> Self {
        ModelSpec::Ggnn {
            hidden: 16,
            steps: 4,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            ModelSpec::Gcn { .. } => Task::NodeClassification,
            ModelSpec::Ggnn { .. } => Task::GraphClassification,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gcn { .. } => "gcn",
            ModelSpec::Ggnn { .. } => "ggnn",
        }
    }

    /// Epoch count used when none is given.
    pub fn default_epochs(&self) -> usize {
        match self {
            ModelSpec::Gcn { .. } => 1000,
            ModelSpec::Ggnn { .. } => 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub test_fraction: f64,
}

impl TrainConfig {
    /// Defaults with the architecture's epoch count.
    pub fn for_spec(spec: &ModelSpec) -> Self {
        TrainConfig {
            epochs: spec.default_epochs(),
            ..TrainConfig::default()
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            epochs: 1000,
            seed: 0,
            test_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Training loss before each update; one entry per epoch.
    pub loss_curve: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Per-class seeded split. Returns `(train, test)` index lists, ascending.
pub fn stratified_split(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::arg(format!(
            "test fraction {test_fraction} must lie in [0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5b17);
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Labels the model is trained on: node labels of the single graph for node
/// tasks, graph labels for graph tasks.
pub fn task_labels(data: &LabeledDataset) -> Result<Vec<usize>> {
    match data.task {
        Task::NodeClassification => data
            .graphs
            .first()
            .and_then(|g| g.node_labels())
            .map(<[usize]>::to_vec)
            .ok_or_else(|| Error::arg(format!("dataset {} has no node labels", data.name))),
        Task::GraphClassification => data
            .graphs
            .iter()
            .enumerate()
            .map(|(i, g)| {
                g.graph_label().ok_or_else(|| {
                    Error::arg(format!("graph {i} of dataset {} has no label", data.name))
                })
            })
            .collect(),
    }
}

struct Adam {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &[&Tensor]) -> Self {
        Adam {
            m: params
                .iter()
                .map(|p| Tensor::zeros(p.rows(), p.cols()))
                .collect(),
            v: params
                .iter()
                .map(|p| Tensor::zeros(p.rows(), p.cols()))
                .collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..g.data().len() {
                let gi = g.data()[i];
                let mi = Self::BETA1 * m.data()[i] + (1.0 - Self::BETA1) * gi;
                let vi = Self::BETA2 * v.data()[i] + (1.0 - Self::BETA2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                p.data_mut()[i] -= lr * (mi / c1) / ((vi / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => Error::Divergence { epoch },
        other => other,
    }
}

/// Full-batch training with constant-step Adam updates. Deterministic given
/// `cfg.seed`.
pub fn train(
    spec: &ModelSpec,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(Model, TrainMetrics)> {
    if spec.task() != data.task {
        return Err(Error::TaskMismatch(format!(
            "a {} model cannot be trained on {} dataset {}",
            spec.name(),
            data.task,
            data.name
        )));
    }
    if data.graphs.is_empty() {
        return Err(Error::arg("dataset has no graphs"));
    }
    let labels = task_labels(data)?;
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let input_dim = data.graphs[0].feature_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = match spec {
        ModelSpec::Gcn { hidden } => {
            let mut dims = vec![input_dim];
            dims.extend_from_slice(hidden);
            dims.push(num_classes);
            Model::Gcn(GcnModel::init(&dims, &mut rng)?)
        }
        ModelSpec::Ggnn { hidden, steps } => Model::Ggnn(GgnnModel::init(
            input_dim,
            *hidden,
            num_classes.max(2),
            *steps,
            &mut rng,
        )?),
    };
    let (train_idx, test_idx) = stratified_split(&labels, cfg.test_fraction, cfg.seed)?;
    if train_idx.is_empty() {
        return Err(Error::arg("training split is empty"));
    }
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();

    let mut adam = Adam::new(&model.params());
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let tape = Tape::new();
        let params = model.bind(&tape, true);
        let loss = epoch_loss(&model, &tape, &params, data, &train_idx, &train_labels)
            .map_err(diverged(epoch))?;
        let value = loss.scalar()?;
        if !value.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        curve.push(value);
        let grads = loss.backward()?;
        let grads: Vec<Tensor> = params.iter().map(|&p| grads.get(p)).collect();
        adam.step(model.params_mut(), &grads, cfg.lr);
    }

    let predicted = predictions(&model, data)?;
    let accuracy = |idx: &[usize]| {
        if idx.is_empty() {
            return f64::NAN;
        }
        idx.iter().filter(|&&i| predicted[i] == labels[i]).count() as f64 / idx.len() as f64
    };
    let metrics = TrainMetrics {
        train_accuracy: accuracy(&train_idx),
        test_accuracy: accuracy(&test_idx),
        loss_curve: curve,
        train_indices: train_idx,
        test_indices: test_idx,
    };
    Ok((model, metrics))
}

fn epoch_loss<'t>(
    model: &Model,
    tape: &'t Tape,
    params: &[Var<'t>],
    data: &LabeledDataset,
    train_idx: &[usize],
    train_labels: &[usize],
) -> Result<Var<'t>> {
    match data.task {
        Task::NodeClassification => {
            let g = &data.graphs[0];
            let fwd =
                model.forward_with(tape, params, g, &EdgeWeights::ones(g.num_edges()), false)?;
            fwd.logits
                .select_rows(train_idx)?
                .softmax_cross_entropy(train_labels)
        }
        Task::GraphClassification => {
            let mut total: Option<Var<'t>> = None;
            for (&i, &label) in train_idx.iter().zip(train_labels) {
                let g = &data.graphs[i];
                let fwd = model.forward_with(
                    tape,
                    params,
                    g,
                    &EdgeWeights::ones(g.num_edges()),
                    false,
                )?;
                let l = fwd.logits.softmax_cross_entropy(&[label])?;
                total = Some(match total {
                    Some(t) => t.add(l)?,
                    None => l,
                });
            }
            total
                .expect("non-empty split")
                .scale(1.0 / train_idx.len() as f64)
        }
    }
}

/// Predicted class per node (node tasks) or per graph (graph tasks).
pub fn predictions(model: &Model, data: &LabeledDataset) -> Result<Vec<usize>> {
    match data.task {
        Task::NodeClassification => model.predict(&data.graphs[0]),
        Task::GraphClassification => data
            .graphs
            .iter()
            .map(|g| model.predict(g).map(|p| p[0]))
            .collect(),
    }
}
