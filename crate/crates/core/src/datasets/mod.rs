//! Generated benchmark datasets with ground-truth explanation edges, and a
//! loader for user-supplied graphs.

mod ba_shapes;
mod io;
mod random;
mod rings;

pub use ba_shapes::{gen_ba_shapes, gen_ba_shapes_with, BaShapesConfig, HOUSE_EDGES};
pub use io::{load_dataset_dir, load_graph_file, save_dataset_dir, save_graph_file, Manifest};
pub use random::gen_random_graph;
pub use rings::{gen_ring_dataset, RING_LEN};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};
use crate::models::Task;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub task: Task,
    pub graphs: Vec<Graph>,
    /// Target (node id for node tasks, graph index for graph tasks) to its
    /// ground-truth explanation edges.
    pub ground_truth: BTreeMap<usize, Vec<EdgeId>>,
}

impl LabeledDataset {
    pub fn validate(&self) -> Result<()> {
        if self.task == Task::NodeClassification && self.graphs.len() != 1 {
            return Err(Error::arg(format!(
                "node-classification dataset {} must contain exactly one graph, found {}",
                self.name,
                self.graphs.len()
            )));
        }
        for (&target, edges) in &self.ground_truth {
            let g = match self.task {
                Task::NodeClassification => {
                    let g = &self.graphs[0];
                    if target >= g.num_nodes() {
                        return Err(Error::arg(format!(
                            "ground-truth target node {target} out of range"
                        )));
                    }
                    g
                }
                Task::GraphClassification => self.graphs.get(target).ok_or_else(|| {
                    Error::arg(format!("ground-truth target graph {target} out of range"))
                })?,
            };
            if let Some(&bad) = edges.iter().find(|&&e| e >= g.num_edges()) {
                return Err(Error::arg(format!(
                    "ground-truth edge {bad} for target {target} out of range"
                )));
            }
        }
        Ok(())
    }

    /// The graph holding `target`.
    pub fn graph_for(&self, target: usize) -> &Graph {
        match self.task {
            Task::NodeClassification => &self.graphs[0],
            Task::GraphClassification => &self.graphs[target],
        }
    }
}
