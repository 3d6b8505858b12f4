use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, Labels};
use crate::models::Task;
use crate::tensor::Tensor;

pub const RING_LEN: usize = 6;
const MAX_DEGREE: usize = 4;
const DEGREE_FEATURES: usize = MAX_DEGREE + 1;

/// Balanced graph-classification set. Even indices are positives: a 6-cycle
/// with 0 to 6 small pendant trees. Odd indices are random trees with the
/// same node count as the preceding positive. Node ids are shuffled per graph
/// and features are a one-hot encoding of node degree (capped at 4).
pub fn gen_ring_dataset(num_graphs: usize, seed: u64) -> Result<LabeledDataset> {
    if num_graphs < 2 {
        return Err(Error::arg(format!(
            "ring dataset needs at least 2 graphs, got {num_graphs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(num_graphs);
    let mut ground_truth = BTreeMap::new();
    let mut size = 0;
    for i in 0..num_graphs {
        let positive = i % 2 == 0;
        let (n, edges) = if positive {
            let (n, edges) = ring_with_pendants(&mut rng);
            size = n;
            (n, edges)
        } else {
            (size, random_tree(size, &mut rng))
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let features = Tensor::from_fn(n, DEGREE_FEATURES, |r, c| {
            if degree[r].min(MAX_DEGREE) == c {
                1.0
            } else {
                0.0
            }
        });
        let g = Graph::build(
            n,
            &edges,
            features,
            Labels {
                node_labels: None,
                graph_label: Some(usize::from(positive)),
                name: format!("rings-{i:04}"),
            },
        )?;
        if positive {
            let ring: Vec<usize> = (0..RING_LEN)
                .map(|k| {
                    g.find_edge(perm[k], perm[(k + 1) % RING_LEN])
                        .expect("ring edge present")
                })
                .collect();
            ground_truth.insert(i, ring);
        }
        graphs.push(g);
    }
    Ok(LabeledDataset {
        name: "rings".into(),
        task: Task::GraphClassification,
        graphs,
        ground_truth,
    })
}

/// Ring on nodes `0..6` plus pendant trees of 1 to 3 nodes each.
fn ring_with_pendants(rng: &mut impl Rng) -> (usize, Vec<(usize, usize)>) {
    let mut edges: Vec<(usize, usize)> = (0..RING_LEN).map(|k| (k, (k + 1) % RING_LEN)).collect();
    let mut degree = vec![2usize; RING_LEN];
    let pendants = rng.gen_range(0..=6);
    for _ in 0..pendants {
        let open: Vec<usize> = (0..RING_LEN)
            .filter(|&v| degree[v] < MAX_DEGREE - 1)
            .collect();
        let Some(&anchor) = open.choose(rng) else {
            break;
        };
        let tree_size = rng.gen_range(1..=3);
        let mut members = vec![anchor];
        for _ in 0..tree_size {
            let open: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&v| degree[v] < MAX_DEGREE)
                .collect();
            let parent = *open
                .choose(rng)
                .expect("a pendant tree always has an open slot");
            let child = degree.len();
            degree.push(1);
            degree[parent] += 1;
            edges.push((parent, child));
            members.push(child);
        }
    }
    (degree.len(), edges)
}

/// Random recursive tree with degrees capped at 4.
fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for child in 1..n {
        let open: Vec<usize> = (0..child).filter(|&v| degree[v] < MAX_DEGREE).collect();
        let parent = *open
            .choose(rng)
            .expect("a capped tree always has an open slot");
        degree[parent] += 1;
        degree[child] += 1;
        edges.push((parent, child));
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Number of independent cycles (edges - nodes + components).
    fn cyclomatic(g: &Graph) -> usize {
        let mut parent: Vec<usize> = (0..g.num_nodes()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        let mut cycles = 0;
        for &(u, v) in g.edges() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                cycles += 1;
            } else {
                parent[a] = b;
            }
        }
        cycles
    }

    #[test]
    fn labels_match_cycle_detection() {
        let d = gen_ring_dataset(101, 3).unwrap();
        let positives = d
            .graphs
            .iter()
            .filter(|g| g.graph_label() == Some(1))
            .count();
        assert_eq!(positives, 51);
        for (i, g) in d.graphs.iter().enumerate() {
            let label = g.graph_label().unwrap();
            assert_eq!(cyclomatic(g), label, "graph {i}");
            if label == 0 {
                assert_eq!(g.num_edges(), g.num_nodes() - 1);
            } else {
                let ring = &d.ground_truth[&i];
                assert_eq!(ring.len(), RING_LEN);
                let without = g.without_edges(&ring[..1]).unwrap();
                assert_eq!(cyclomatic(&without), 0);
            }
            for v in 0..g.num_nodes() {
                let deg = g.neighbors(v).unwrap().len();
                assert!(deg <= MAX_DEGREE);
                assert_eq!(g.features().get(v, deg), 1.0);
            }
        }
        d.validate().unwrap();
    }

    #[test]
    fn matched_sizes_and_determinism() {
        let d = gen_ring_dataset(20, 9).unwrap();
        for pair in d.graphs.chunks(2) {
            assert_eq!(pair[0].num_nodes(), pair[1].num_nodes());
        }
        assert_eq!(d, gen_ring_dataset(20, 9).unwrap());
        assert!(gen_ring_dataset(1, 0).is_err());
    }
}
