use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lasso::fit_lasso;
use super::EdgeModel;
use crate::error::{Error, Result};
use crate::exec::{substream, Exec};
use crate::graph::EdgeWeights;
use crate::tensor::Tensor;

/// Weight given to a perturbed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    /// Uniform in `[0, 1)`.
    #[default]
    Uniform,
    /// Exactly 0, which is plain edge removal.
    Zero,
}

/// Regression inputs for the surrogate model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimeFeatures {
    /// The edge weights themselves.
    #[default]
    Weight,
    /// 1 for an untouched edge, 0 for a perturbed one.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub p: f64,
    /// Sample count; `None` means `min(2000, 50 * edges)`.
    #[serde(default)]
    pub m: Option<usize>,
    /// Kernel width; `None` means `sqrt(edges)`.
    #[serde(default)]
    pub sigma: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub features: LimeFeatures,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            p: 0.3,
            m: None,
            sigma: None,
            lambda: 0.01,
            seed: 0,
            perturbation: Perturbation::Uniform,
            features: LimeFeatures::Weight,
        }
    }
}

impl LimeConfig {
    /// Fills the size-dependent defaults for a graph with `num_edges` edges.
    pub fn resolved(&self, num_edges: usize) -> LimeConfig {
        LimeConfig {
            m: Some(self.m.unwrap_or_else(|| (50 * num_edges).clamp(1, 2000))),
            sigma: Some(
                self.sigma
                    .unwrap_or_else(|| (num_edges.max(1) as f64).sqrt()),
            ),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::arg(format!(
                "LIME p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.m == Some(0) {
            return Err(Error::arg("LIME m must be at least 1"));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::arg(format!("LIME sigma must be positive, got {s}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!(
                "LIME lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Each weight is perturbed with probability `p`, otherwise left at 1.
pub fn perturb_edges(
    num_edges: usize,
    p: f64,
    mode: Perturbation,
    rng: &mut impl Rng,
) -> Result<EdgeWeights> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!(
            "perturbation probability must lie in (0, 1), got {p}"
        )));
    }
    let w = (0..num_edges)
        .map(|_| {
            if rng.gen_bool(p) {
                match mode {
                    Perturbation::Uniform => rng.gen_range(0.0..1.0),
                    Perturbation::Zero => 0.0,
                }
            } else {
                1.0
            }
        })
        .collect();
    EdgeWeights::new(w)
}

/// `exp(-(n - |x|_1)^2 / sigma^2)`.
pub fn kernel_weight(x: &EdgeWeights, n: usize, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::arg(format!(
            "kernel width must be positive, got {sigma}"
        )));
    }
    let d = n as f64 - x.l1();
    Ok((-(d * d) / (sigma * sigma)).exp())
}

/// Fits a weighted sparse linear surrogate to the model's outputs on
/// perturbed edge weights. Sample `k` draws from its own RNG substream.
pub fn explain_lime(model: &dyn EdgeModel, cfg: &LimeConfig, exec: &Exec) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = model.num_edges();
    let cfg = cfg.resolved(n);
    let (m, sigma) = (cfg.m.expect("resolved"), cfg.sigma.expect("resolved"));
    if n == 0 {
        return Ok(Vec::new());
    }
    let samples = exec.try_map(m, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(cfg.seed, k as u64));
        let x = perturb_edges(n, cfg.p, cfg.perturbation, &mut rng)?;
        let y = model.output(&x)?;
        Ok((x, y))
    })?;
    let design = Tensor::from_fn(m, n, |k, j| {
        let v = samples[k].0.get(j);
        match cfg.features {
            LimeFeatures::Weight => v,
            LimeFeatures::Binary => f64::from(v == 1.0),
        }
    });
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let weights = samples
        .iter()
        .map(|(x, _)| kernel_weight(x, n, sigma))
        .collect::<Result<Vec<f64>>>()?;
    Ok(fit_lasso(&design, &y, &weights, cfg.lambda)?.coefficients)
}
