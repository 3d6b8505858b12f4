use std::sync::atomic::{AtomicUsize, Ordering};

use super::EdgeModel;
use crate::error::{Error, Result};
use crate::graph::{EdgeWeights, Graph};
use crate::models::{MessageTrace, TraceStep, TracedMessage};
use crate::tensor::{Tape, Tensor, Var};

/// Planted model `y = sum_i c_i * ew_i` over a graph's edges.
///
/// Its trace has one step in which edge `i` sends the 1-dimensional message
/// `ew_i` in each direction. Each directed message lands in its own
/// aggregate row, and `y` weights every row by `c_i / 2`, so the gradient
/// with respect to a message is exactly `c_i / 2`.
#[derive(Debug)]
pub struct LinearProbe {
    graph: Graph,
    coefs: Vec<f64>,
    counter: AtomicUsize,
}

impl LinearProbe {
    pub fn new(graph: Graph, coefs: Vec<f64>) -> Result<Self> {
        if coefs.len() != graph.num_edges() {
            return Err(Error::arg(format!(
                "linear probe has {} coefficients for {} edges",
                coefs.len(),
                graph.num_edges()
            )));
        }
        Ok(LinearProbe {
            graph,
            coefs,
            counter: AtomicUsize::new(0),
        })
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

impl EdgeModel for LinearProbe {
    fn num_edges(&self) -> usize {
        self.coefs.len()
    }

    fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn output(&self, ew: &EdgeWeights) -> Result<f64> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        ew.check_for(&self.graph)?;
        Ok(self.coefs.iter().zip(ew.values()).map(|(c, w)| c * w).sum())
    }

    fn traced<'t>(&self, tape: &'t Tape) -> Result<(Var<'t>, MessageTrace<'t>)> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let ew = tape.leaf(Tensor::filled(self.num_edges().max(1), 1, 1.0));
        let mut messages = Vec::with_capacity(2 * self.num_edges());
        let mut coefs = Vec::with_capacity(2 * self.num_edges());
        for v in 0..self.graph.num_nodes() {
            for &(w, e) in self.graph.adj(v) {
                messages.push(TracedMessage {
                    edge: e,
                    src: w,
                    dst: v,
                    var: ew.message(e, 1.0)?,
                });
                coefs.push(self.coefs[e] / 2.0);
            }
        }
        let pairs: Vec<_> = messages
            .iter()
            .enumerate()
            .map(|(r, m)| (m.var, r))
            .collect();
        let base = tape.constant(Tensor::zeros(messages.len(), 1));
        let aggregate = tape.scatter(base, &pairs)?;
        let y = aggregate.scale_rows(&coefs)?.sum_all()?;
        Ok((
            y,
            MessageTrace {
                steps: vec![TraceStep {
                    messages,
                    aggregate,
                }],
            },
        ))
    }

    fn forward_passes(&self) -> usize {
        self.counter.load(Ordering::Relaxed)
    }
}
