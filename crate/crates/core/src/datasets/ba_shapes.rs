use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::graph::{Graph, Labels};
use crate::models::Task;
use crate::tensor::Tensor;

/// House motif over local ids: roof 0, shoulders 1 and 2, base 3 and 4.
pub const HOUSE_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)];
const HOUSE_LABELS: [usize; 5] = [1, 2, 2, 3, 3];

#[derive(Debug, Clone, PartialEq)]
pub struct BaShapesConfig {
    pub base_nodes: usize,
    pub houses: usize,
    /// Edges added per new node in the preferential-attachment base graph.
    pub attachment: usize,
    pub feature_dim: usize,
}

impl Default for BaShapesConfig {
    fn default() -> Self {
        BaShapesConfig {
            base_nodes: 300,
            houses: 80,
            attachment: 5,
            feature_dim: 8,
        }
    }
}

/// The standard 300-node base with 80 houses.
pub fn gen_ba_shapes(seed: u64) -> LabeledDataset {
    gen_ba_shapes_with(&BaShapesConfig::default(), seed)
}

/// Barabási–Albert base graph plus attached house motifs. Base nodes are
/// labeled 0, roofs 1, shoulders 2, house bases 3. Each house hangs off the
/// base by a single edge from a random house node to a random base node.
pub fn gen_ba_shapes_with(cfg: &BaShapesConfig, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = barabasi_albert(cfg.base_nodes, cfg.attachment, &mut rng);
    let n = cfg.base_nodes + 5 * cfg.houses;
    let mut labels = vec![0usize; n];
    let mut houses = Vec::with_capacity(cfg.houses);
    for h in 0..cfg.houses {
        let first = cfg.base_nodes + 5 * h;
        for (i, &l) in HOUSE_LABELS.iter().enumerate() {
            labels[first + i] = l;
        }
        edges.extend(HOUSE_EDGES.iter().map(|&(a, b)| (first + a, first + b)));
        let from = first + rng.gen_range(0..5);
        let to = rng.gen_range(0..cfg.base_nodes.max(1));
        if cfg.base_nodes > 0 {
            edges.push((to, from));
        }
        houses.push(first);
    }
    let graph = Graph::build(
        n,
        &edges,
        Tensor::filled(n, cfg.feature_dim, 1.0),
        Labels {
            node_labels: Some(labels),
            graph_label: None,
            name: "ba-shapes".into(),
        },
    )
    .expect("generated BA-shapes graph is valid");
    let mut ground_truth = BTreeMap::new();
    for first in houses {
        let ids: Vec<usize> = HOUSE_EDGES
            .iter()
            .map(|&(a, b)| graph.find_edge(first + a, first + b).expect("house edge"))
            .collect();
        for i in 0..5 {
            ground_truth.insert(first + i, ids.clone());
        }
    }
    LabeledDataset {
        name: "ba-shapes".into(),
        task: Task::NodeClassification,
        graphs: vec![graph],
        ground_truth,
    }
}

/// Preferential attachment: the first new node joins all `m` seed nodes, and
/// each later node picks `m` distinct targets with probability proportional
/// to degree.
fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if m == 0 || n <= m {
        return edges;
    }
    let mut repeated: Vec<usize> = Vec::new();
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            edges.push((t, source));
        }
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat_n(source, m));
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = repeated[rng.gen_range(0..repeated.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        targets = chosen;
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_labels() {
        let d = gen_ba_shapes(7);
        let g = &d.graphs[0];
        assert_eq!(g.num_nodes(), 700);
        assert_eq!(g.num_edges(), 5 * 295 + 80 * 6 + 80);
        let labels = g.node_labels().unwrap();
        assert!(labels[..300].iter().all(|&l| l == 0));
        assert!(labels[300..].iter().all(|&l| (1..=3).contains(&l)));
        assert_eq!(d.ground_truth.len(), 400);
        assert!(d.ground_truth.values().all(|gt| gt.len() == 6));
        d.validate().unwrap();
    }

    #[test]
    fn shoulder_has_three_house_neighbors() {
        let d = gen_ba_shapes(3);
        let g = &d.graphs[0];
        for h in 0..80 {
            let first = 300 + 5 * h;
            let shoulder = first + 1;
            let inside = g
                .neighbors(shoulder)
                .unwrap()
                .iter()
                .filter(|(w, _)| (first..first + 5).contains(w))
                .count();
            assert_eq!(inside, 3);
        }
    }

    #[test]
    fn houses_are_disjoint_and_attach_to_base() {
        let d = gen_ba_shapes(11);
        let g = &d.graphs[0];
        let house_of = |v: usize| if v >= 300 { Some((v - 300) / 5) } else { None };
        let mut attachments = vec![0; 80];
        for &(u, v) in g.edges() {
            match (house_of(u), house_of(v)) {
                (Some(a), Some(b)) => assert_eq!(a, b, "edge ({u}, {v}) joins two houses"),
                (None, Some(h)) | (Some(h), None) => attachments[h] += 1,
                (None, None) => {}
            }
        }
        assert!(attachments.iter().all(|&c| c == 1));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(gen_ba_shapes(5), gen_ba_shapes(5));
        assert_ne!(
            gen_ba_shapes(5).graphs[0].edges(),
            gen_ba_shapes(6).graphs[0].edges()
        );
    }
}
