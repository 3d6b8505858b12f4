use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Labels};
use crate::tensor::Tensor;

/// Erdős–Rényi graph with features uniform in `[-1, 1)` and random node
/// labels in `0..classes`.
pub fn gen_random_graph(
    n: usize,
    edge_prob: f64,
    feature_dim: usize,
    classes: usize,
    seed: u64,
) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(edge_prob.clamp(0.0, 1.0)) {
                edges.push((u, v));
            }
        }
    }
    let features = Tensor::from_fn(n, feature_dim.max(1), |_, _| rng.gen_range(-1.0..1.0));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes.max(1))).collect();
    Graph::build(
        n,
        &edges,
        features,
        Labels {
            node_labels: Some(labels),
            graph_label: None,
            name: format!("random-{seed}"),
        },
    )
    .expect("generated graph is valid")
}
