use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Labels};

/// The part of a graph that can influence a GCN output at one node.
///
/// For `hops` propagation layers, the logits of `center` depend on the
/// features of nodes within `hops` and on the degrees of those nodes, so the
/// view keeps every edge with at least one endpoint within `hops`. Node and
/// edge order follow the original ids, which keeps every floating-point sum
/// in the same order as on the full graph; the center's logits are
/// bit-identical to a full-graph forward.
#[derive(Debug, Clone)]
pub struct LocalView {
    pub graph: Graph,
    /// Local node id -> original node id.
    pub nodes: Vec<usize>,
    /// Local edge id -> original edge id.
    pub edges: Vec<EdgeId>,
    pub center: usize,
}

impl LocalView {
    pub fn around(g: &Graph, center: usize, hops: usize) -> Result<Self> {
        if center >= g.num_nodes() {
            return Err(Error::NodeOutOfRange {
                what: "target node",
                index: center,
                num_nodes: g.num_nodes(),
            });
        }
        let mut dist = vec![usize::MAX; g.num_nodes()];
        dist[center] = 0;
        let mut queue = VecDeque::from([center]);
        while let Some(v) = queue.pop_front() {
            if dist[v] >= hops {
                continue;
            }
            for &(w, _) in g.adj(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut edges: Vec<EdgeId> = Vec::new();
        let mut keep_node = vec![false; g.num_nodes()];
        for (id, &(u, v)) in g.edges().iter().enumerate() {
            if dist[u] <= hops || dist[v] <= hops {
                edges.push(id);
                keep_node[u] = true;
                keep_node[v] = true;
            }
        }
        keep_node[center] = true;
        let nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| keep_node[v]).collect();
        let mut local_id = vec![usize::MAX; g.num_nodes()];
        for (i, &v) in nodes.iter().enumerate() {
            local_id[v] = i;
        }
        let pairs: Vec<(usize, usize)> = edges
            .iter()
            .map(|&id| {
                let (u, v) = g.edge(id);
                (local_id[u], local_id[v])
            })
            .collect();
        let features = g.features().select_rows(&nodes)?;
        let labels = Labels {
            node_labels: g
                .node_labels()
                .map(|l| nodes.iter().map(|&v| l[v]).collect()),
            graph_label: g.graph_label(),
            name: g.name().to_string(),
        };
        let graph = Graph::build(nodes.len(), &pairs, features, labels)?;
        debug_assert!(graph
            .edges()
            .iter()
            .zip(&edges)
            .all(|(&(a, b), &id)| g.edge(id) == (nodes[a], nodes[b])));
        Ok(LocalView {
            graph,
            center: local_id[center],
            nodes,
            edges,
        })
    }

    /// Maps original edge ids to local ids, dropping edges outside the view.
    pub fn localize_edges(&self, global: &[EdgeId]) -> Vec<EdgeId> {
        global
            .iter()
            .filter_map(|id| self.edges.binary_search(id).ok())
            .collect()
    }

    /// Spreads a local per-edge vector over the original edge set, with zeros
    /// for edges outside the view.
    pub fn expand(&self, local: &[f64], num_global_edges: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_global_edges];
        for (&id, &v) in self.edges.iter().zip(local) {
            out[id] = v;
        }
        out
    }
}
