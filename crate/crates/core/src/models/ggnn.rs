use std::rc::Rc;

use rand::Rng;

use super::{glorot, trace_messages, Forward, MessageTrace, TraceStep};
use crate::error::{Error, Result};
use crate::graph::{EdgeWeights, Graph};
use crate::tensor::{Sparse, Tape, Tensor, Var};

const NUM_PARAMS: usize = 14;

/// Gated graph network: inputs are projected to the state size, then `steps`
/// rounds of `h_v <- GRU(h_v, sum_w ew * W h_w)`, then a linear readout of
/// the mean node state.
///
/// Parameters, in order: projection, projection bias, message matrix `W`,
/// update gate (`Wz`, `Uz`, `bz`), reset gate (`Wr`, `Ur`, `br`), candidate
/// (`Wh`, `Uh`, `bh`), readout, readout bias. Row-vector convention: a
/// message row is `h_w * W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GgnnModel {
    input_dim: usize,
    hidden: usize,
    num_classes: usize,
    steps: usize,
    params: Vec<Tensor>,
}

fn layout(input_dim: usize, d: usize, classes: usize) -> [(usize, usize); NUM_PARAMS] {
    [
        (input_dim, d),
        (1, d),
        (d, d),
        (d, d),
        (d, d),
        (1, d),
        (d, d),
        (d, d),
        (1, d),
        (d, d),
        (d, d),
        (1, d),
        (d, classes),
        (1, classes),
    ]
}

impl GgnnModel {
    pub fn init(
        input_dim: usize,
        hidden: usize,
        num_classes: usize,
        steps: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if steps == 0 || input_dim == 0 || hidden == 0 || num_classes == 0 {
            return Err(Error::arg("GGNN needs positive dims and at least one step"));
        }
        let params = layout(input_dim, hidden, num_classes)
            .iter()
            .map(|&(r, c)| {
                if r == 1 {
                    Tensor::zeros(r, c)
                } else {
                    glorot(r, c, rng)
                }
            })
            .collect();
        Ok(GgnnModel {
            input_dim,
            hidden,
            num_classes,
            steps,
            params,
        })
    }

    pub fn from_params(
        input_dim: usize,
        hidden: usize,
        num_classes: usize,
        steps: usize,
        params: Vec<Tensor>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::arg("GGNN needs at least one step"));
        }
        let want = layout(input_dim, hidden, num_classes);
        if params.len() != NUM_PARAMS {
            return Err(Error::arg(format!(
                "GGNN expects {NUM_PARAMS} parameter tensors, got {}",
                params.len()
            )));
        }
        for (p, &shape) in params.iter().zip(&want) {
            if p.shape() != shape {
                return Err(Error::Shape {
                    op: "ggnn parameter",
                    left: p.shape(),
                    right: shape,
                });
            }
        }
        Ok(GgnnModel {
            input_dim,
            hidden,
            num_classes,
            steps,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn message_matrix(&self) -> &Tensor {
        &self.params[2]
    }

    pub(crate) fn params(&self) -> Vec<&Tensor> {
        self.params.iter().collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.params.iter_mut().collect()
    }

    pub(crate) fn forward<'t>(
        &self,
        tape: &'t Tape,
        p: &[Var<'t>],
        g: &Graph,
        ew: &EdgeWeights,
        trace: bool,
    ) -> Result<Forward<'t>> {
        let n = g.num_nodes();
        let sparse = Rc::new(Sparse::from_rows(
            n,
            (0..n)
                .map(|v| g.adj(v).iter().map(|&(w, e)| (w, ew.get(e))).collect())
                .collect(),
        ));
        let mut steps = Vec::new();
        let x = tape.constant(g.features().clone());
        let mut h = x.matmul(p[0])?.add(p[1])?;
        for _ in 0..self.steps {
            let m = h.matmul(p[2])?;
            let a = if trace {
                let base = tape.constant(Tensor::zeros(n, self.hidden));
                let messages = trace_messages(g, m, |_, _, e| ew.get(e))?;
                let pairs: Vec<_> = messages.iter().map(|t| (t.var, t.dst)).collect();
                let aggregate = tape.scatter(base, &pairs)?;
                steps.push(TraceStep {
                    messages,
                    aggregate,
                });
                aggregate
            } else {
                m.propagate(&sparse)?
            };
            h = gru(a, h, &p[3..12])?;
        }
        let pooled = h.mean_rows()?;
        let logits = pooled.matmul(p[12])?.add(p[13])?;
        Ok(Forward {
            logits,
            node_states: h,
            trace: trace.then_some(MessageTrace { steps }),
        })
    }
}

/// `h' = (1 - z) * h + z * tanh(a Wh + (r * h) Uh + bh)` with sigmoid gates
/// `z`, `r`.
pub(super) fn gru<'t>(a: Var<'t>, h: Var<'t>, p: &[Var<'t>]) -> Result<Var<'t>> {
    let gate = |w: Var<'t>, u: Var<'t>, b: Var<'t>| -> Result<Var<'t>> {
        a.matmul(w)?.add(h.matmul(u)?)?.add(b)?.sigmoid()
    };
    let z = gate(p[0], p[1], p[2])?;
    let r = gate(p[3], p[4], p[5])?;
    let cand = a
        .matmul(p[6])?
        .add(r.mul(h)?.matmul(p[7])?)?
        .add(p[8])?
        .tanh()?;
    h.add(z.mul(cand.sub(h)?)?)
}
