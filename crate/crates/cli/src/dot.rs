//! Graphviz rendering of an explanation.

use std::fmt::Write as _;

use grex::explain::top_k_edges;
use grex::graph::Graph;

use crate::error::CliError;

/// Importances min-max scaled to `[0, 1]`; a constant vector maps to 0.5.
pub fn normalize(importance: &[f64]) -> Vec<f64> {
    let lo = importance.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = importance.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.5; importance.len()];
    }
    importance.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// Undirected DOT graph. Pen width and red saturation grow with the
/// normalized importance; the `top_k` edges are drawn bold and labeled by
/// rank. Highlighting is skipped when every edge scores the same.
pub fn render(g: &Graph, importance: &[f64], top_k: Option<usize>) -> Result<String, CliError> {
    if importance.len() != g.num_edges() {
        return Err(CliError::new(
            "E-ARG",
            format!(
                "explanation has {} scores but graph {} has {} edges",
                importance.len(),
                g.name(),
                g.num_edges()
            ),
        ));
    }
    let scaled = normalize(importance);
    let uniform = importance.windows(2).all(|w| w[0] == w[1]);
    let mut rank = vec![None; g.num_edges()];
    if let (Some(k), false) = (top_k, uniform) {
        for (r, e) in top_k_edges(importance, k).into_iter().enumerate() {
            rank[e] = Some(r + 1);
        }
    }
    let mut out = String::new();
    let name = g.name().replace(['"', '\\'], "_");
    writeln!(out, "graph \"{name}\" {{").unwrap();
    writeln!(out, "  node [shape=circle, fontsize=10];").unwrap();
    for v in 0..g.num_nodes() {
        writeln!(out, "  {v};").unwrap();
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let t = scaled[e];
        write!(
            out,
            "  {u} -- {v} [penwidth={:.3}, color=\"0.000 {t:.3} 0.850\", tooltip=\"edge {e}: {}\"",
            1.0 + 4.0 * t,
            importance[e]
        )
        .unwrap();
        if let Some(r) = rank[e] {
            write!(out, ", style=bold, label=\"#{r}\"").unwrap();
        }
        writeln!(out, "];").unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}
