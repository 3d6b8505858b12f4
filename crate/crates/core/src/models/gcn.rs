use std::rc::Rc;

use rand::Rng;

use super::{glorot, trace_messages, Forward, MessageTrace, TraceStep};
use crate::error::{Error, Result};
use crate::graph::{EdgeWeights, Graph};
use crate::tensor::{Sparse, Tape, Tensor, Var};

/// Stack of graph convolutions `H' = act(Â H Θ + b)`; the last layer is
/// linear and yields per-node class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    dims: Vec<usize>,
    weights: Vec<Tensor>,
    biases: Vec<Tensor>,
}

impl GcnModel {
    /// `dims = [input, hidden..., classes]`.
    pub fn init(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::arg(format!("invalid GCN dims {dims:?}")));
        }
        let weights = dims.windows(2).map(|w| glorot(w[0], w[1], rng)).collect();
        let biases = dims[1..].iter().map(|&d| Tensor::zeros(1, d)).collect();
        Ok(GcnModel {
            dims: dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(weights: Vec<Tensor>, biases: Vec<Tensor>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::arg("GCN needs one bias per weight matrix"));
        }
        let mut dims = vec![weights[0].rows()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.rows() != *dims.last().unwrap() || b.shape() != (1, w.cols()) {
                return Err(Error::Shape {
                    op: "gcn layer",
                    left: w.shape(),
                    right: b.shape(),
                });
            }
            dims.push(w.cols());
        }
        Ok(GcnModel {
            dims,
            weights,
            biases,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub(crate) fn params(&self) -> Vec<&Tensor> {
        self.weights.iter().chain(&self.biases).collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .collect()
    }

    pub(crate) fn forward<'t>(
        &self,
        tape: &'t Tape,
        params: &[Var<'t>],
        g: &Graph,
        ew: &EdgeWeights,
        trace: bool,
    ) -> Result<Forward<'t>> {
        let layers = self.num_layers();
        let (weights, biases) = params.split_at(layers);
        let prop = gcn_propagation(g, ew);
        let self_coefs: Vec<f64> = (0..g.num_nodes()).map(|v| prop.self_coef[v]).collect();
        let sparse = Rc::new(prop.matrix);
        let mut steps = Vec::new();
        let mut h = tape.constant(g.features().clone());
        for l in 0..layers {
            let xw = h.matmul(weights[l])?;
            let agg = if trace {
                let base = xw.scale_rows(&self_coefs)?;
                let messages = trace_messages(g, xw, |v, w, e| {
                    ew.get(e) * prop.inv_sqrt[v] * prop.inv_sqrt[w]
                })?;
                let pairs: Vec<_> = messages.iter().map(|m| (m.var, m.dst)).collect();
                let aggregate = tape.scatter(base, &pairs)?;
                steps.push(TraceStep {
                    messages,
                    aggregate,
                });
                aggregate
            } else {
                xw.propagate(&sparse)?
            };
            let z = agg.add(biases[l])?;
            h = if l + 1 < layers { z.relu()? } else { z };
        }
        Ok(Forward {
            logits: h,
            node_states: h,
            trace: trace.then_some(MessageTrace { steps }),
        })
    }
}

/// Weight-injected GCN propagation operator in sparse form. Row `v` holds
/// the self-loop entry first, then neighbors in ascending order.
#[derive(Debug, Clone)]
pub struct GcnPropagation {
    pub matrix: Sparse,
    pub self_coef: Vec<f64>,
    pub inv_sqrt: Vec<f64>,
}

pub fn gcn_propagation(g: &Graph, ew: &EdgeWeights) -> GcnPropagation {
    let n = g.num_nodes();
    let mut degree = vec![1.0; n];
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        degree[u] += ew.get(i);
        degree[v] += ew.get(i);
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let self_coef: Vec<f64> = inv_sqrt.iter().map(|s| 1.0 * s * s).collect();
    let rows = (0..n)
        .map(|v| {
            let mut row = Vec::with_capacity(g.adj(v).len() + 1);
            row.push((v, self_coef[v]));
            row.extend(
                g.adj(v)
                    .iter()
                    .map(|&(w, e)| (w, ew.get(e) * inv_sqrt[v] * inv_sqrt[w])),
            );
            row
        })
        .collect();
    GcnPropagation {
        matrix: Sparse::from_rows(n, rows),
        self_coef,
        inv_sqrt,
    }
}

/// Dense `D^-1/2 (A_w + I) D^-1/2`.
pub fn normalized_adjacency(g: &Graph, ew: &EdgeWeights) -> Result<Tensor> {
    ew.check_for(g)?;
    Ok(gcn_propagation(g, ew).matrix.to_dense())
}
