//! Undirected attributed graphs and the per-edge weight view used by models
//! and explainers.
//!
//! Edges are stored once, as `(u, v)` with `u < v`, in lexicographic order.
//! The position of an edge in that list is its [`EdgeId`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Stable index of an undirected edge in [`Graph::edges`].
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Tensor,
    node_labels: Option<Vec<usize>>,
    graph_label: Option<usize>,
    name: String,
    adjacency: Vec<Vec<(usize, EdgeId)>>,
}

/// Optional label information attached at construction.
#[derive(Debug, Clone, Default)]
pub struct Labels {
    pub node_labels: Option<Vec<usize>>,
    pub graph_label: Option<usize>,
    pub name: String,
}

impl Graph {
    /// Validates and canonicalizes a graph. Pairs may be given in either
    /// orientation; they are stored as `(min, max)` and sorted.
    pub fn build(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Tensor,
        labels: Labels,
    ) -> Result<Self> {
        let mut canon = Vec::with_capacity(edges.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            if let Some(x) = [a, b].into_iter().find(|&x| x >= num_nodes) {
                return Err(Error::InvalidGraph(format!(
                    "node id out of range: {x} in edge {i} (num_nodes = {num_nodes})"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "self-loop at edge {i} on node {a}"
                )));
            }
            canon.push((a.min(b), a.max(b), i));
        }
        canon.sort_unstable();
        for w in canon.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {}) at input index {}",
                    w[1].0,
                    w[1].1,
                    w[0].2.max(w[1].2)
                )));
            }
        }
        if features.rows() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows but the graph has {num_nodes} nodes",
                features.rows()
            )));
        }
        if features.cols() == 0 {
            return Err(Error::InvalidGraph(
                "feature dimension must be at least 1".into(),
            ));
        }
        if let Some(labels) = &labels.node_labels {
            if labels.len() != num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "{} node labels for {num_nodes} nodes",
                    labels.len()
                )));
            }
        }
        let edges: Vec<(usize, usize)> = canon.into_iter().map(|(u, v, _)| (u, v)).collect();
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            num_nodes,
            edges,
            features,
            node_labels: labels.node_labels,
            graph_label: labels.graph_label,
            name: labels.name,
            adjacency,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (usize, usize) {
        self.edges[id]
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn graph_label(&self) -> Option<usize> {
        self.graph_label
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Neighbors of `v` in ascending id order, each with the connecting edge.
    pub fn neighbors(&self, v: usize) -> Result<&[(usize, EdgeId)]> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange {
                what: "node",
                index: v,
                num_nodes: self.num_nodes,
            })
    }

    /// Unchecked neighbor lookup for hot loops where `v` is known valid.
    pub(crate) fn adj(&self, v: usize) -> &[(usize, EdgeId)] {
        &self.adjacency[v]
    }

    /// Looks up the id of the edge joining `a` and `b`, if any.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<EdgeId> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges.binary_search(&(u, v)).ok()
    }

    /// Copy of this graph without the listed edges.
    pub fn without_edges(&self, removed: &[EdgeId]) -> Result<Graph> {
        let mut keep = vec![true; self.edges.len()];
        for &id in removed {
            if id >= keep.len() {
                return Err(Error::arg(format!("edge id {id} out of range")));
            }
            keep[id] = false;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&e, _)| e)
            .collect();
        Graph::build(self.num_nodes, &edges, self.features.clone(), self.labels())
    }

    pub fn labels(&self) -> Labels {
        Labels {
            node_labels: self.node_labels.clone(),
            graph_label: self.graph_label,
            name: self.name.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            num_nodes: self.num_nodes,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            node_features: (0..self.num_nodes)
                .map(|r| self.features.row(r).to_vec())
                .collect(),
            node_labels: self.node_labels.clone(),
            graph_label: self.graph_label,
            name: if self.name.is_empty() {
                None
            } else {
                Some(self.name.clone())
            },
        };
        serde_json::to_string(&file).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> std::result::Result<Result<Graph>, serde_json::Error> {
        let file: GraphFile = serde_json::from_str(text)?;
        Ok(file.into_graph())
    }
}

/// On-disk JSON layout of a single graph.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub num_nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub node_features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<Graph> {
        let dim = self.node_features.first().map_or(0, Vec::len);
        for (i, row) in self.node_features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidGraph(format!(
                    "feature row {i} has length {} but row 0 has length {dim}",
                    row.len()
                )));
            }
        }
        let data: Vec<f64> = self.node_features.into_iter().flatten().collect();
        let features = Tensor::new(self::rows_of(&data, dim), dim, data)?;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::build(
            self.num_nodes,
            &edges,
            features,
            Labels {
                node_labels: self.node_labels,
                graph_label: self.graph_label,
                name: self.name.unwrap_or_default(),
            },
        )
    }
}

fn rows_of(data: &[f64], dim: usize) -> usize {
    data.len().checked_div(dim).unwrap_or(0)
}

/// Per-edge multipliers in `[0, 1]`, indexed by [`EdgeId`]. A weight applies
/// to both propagation directions of its edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights(Vec<f64>);

impl EdgeWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::arg(format!(
                "edge weight {i} = {v} is outside [0, 1]"
            )));
        }
        Ok(EdgeWeights(values))
    }

    pub fn ones(n: usize) -> Self {
        EdgeWeights(vec![1.0; n])
    }

    pub fn uniform(g: &Graph, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::arg(format!(
                "uniform weight {value} is outside [0, 1]"
            )));
        }
        Ok(EdgeWeights(vec![value; g.num_edges()]))
    }

    /// All-ones except the listed edges, which are set to zero.
    pub fn with_removed(n: usize, removed: &[EdgeId]) -> Self {
        let mut w = vec![1.0; n];
        for &id in removed {
            w[id] = 0.0;
        }
        EdgeWeights(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, id: EdgeId) -> f64 {
        self.0[id]
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().sum()
    }

    pub(crate) fn check_for(&self, g: &Graph) -> Result<()> {
        if self.0.len() != g.num_edges() {
            return Err(Error::arg(format!(
                "edge weight vector has length {} but the graph has {} edges",
                self.0.len(),
                g.num_edges()
            )));
        }
        Ok(())
    }
}
