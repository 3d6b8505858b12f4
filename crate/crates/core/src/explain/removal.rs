use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EdgeModel;
use crate::error::Result;
use crate::exec::Exec;
use crate::graph::EdgeWeights;

/// `y0 - y_i`, where `y_i` is the target with edge `i` alone set to weight 0.
pub fn explain_removal(model: &dyn EdgeModel, exec: &Exec) -> Result<Vec<f64>> {
    let n = model.num_edges();
    let y0 = model.output(&EdgeWeights::ones(n))?;
    exec.try_map(n, |i| {
        Ok(y0 - model.output(&EdgeWeights::with_removed(n, &[i]))?)
    })
}

/// I.i.d. uniform `[0, 1)` scores.
pub fn explain_random(num_edges: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_edges).map(|_| rng.gen_range(0.0..1.0)).collect()
}
