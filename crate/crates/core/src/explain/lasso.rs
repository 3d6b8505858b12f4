use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Weighted Lasso with an unpenalized intercept:
/// minimizes `sum_k s_k (y_k - w.x_k - b)^2 + lambda * |w|_1`.
///
/// Cyclic coordinate descent on weighted-centered data, stopping when no
/// coefficient moves by more than [`LASSO_TOLERANCE`] in a sweep.
pub fn fit_lasso(x: &Tensor, y: &[f64], weights: &[f64], lambda: f64) -> Result<LassoFit> {
    let (m, n) = (x.rows(), x.cols());
    if m == 0 {
        return Err(Error::arg("lasso needs at least one sample"));
    }
    if y.len() != m || weights.len() != m {
        return Err(Error::Shape {
            op: "fit_lasso",
            left: (m, n),
            right: (y.len(), weights.len()),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!(
            "lasso penalty must be finite and >= 0, got {lambda}"
        )));
    }
    if !x.is_finite() || y.iter().chain(weights).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit_lasso input"));
    }
    if weights.iter().any(|&s| s < 0.0) {
        return Err(Error::arg("lasso sample weights must be >= 0"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::arg("lasso sample weights are all zero"));
    }

    let y_mean = y.iter().zip(weights).map(|(a, s)| a * s).sum::<f64>() / total;
    let mut x_mean = vec![0.0; n];
    for (k, &s) in weights.iter().enumerate() {
        for (mean, v) in x_mean.iter_mut().zip(x.row(k)) {
            *mean += s * v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v /= total);

    // Column-major centered design for cache-friendly coordinate passes.
    let mut cols = vec![0.0; m * n];
    for k in 0..m {
        for (j, v) in x.row(k).iter().enumerate() {
            cols[j * m + k] = v - x_mean[j];
        }
    }
    let col = |j: usize| &cols[j * m..(j + 1) * m];
    let norms: Vec<f64> = (0..n)
        .map(|j| col(j).iter().zip(weights).map(|(v, s)| s * v * v).sum())
        .collect();

    let mut residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut w = vec![0.0; n];
    let half = lambda / 2.0;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..n {
            if norms[j] == 0.0 {
                continue;
            }
            let c = col(j);
            let old = w[j];
            let rho: f64 = c
                .iter()
                .zip(weights)
                .zip(&residual)
                .map(|((v, s), r)| s * v * r)
                .sum::<f64>()
                + old * norms[j];
            let new = soft_threshold(rho, half) / norms[j];
            let delta = new - old;
            if delta != 0.0 {
                for (r, v) in residual.iter_mut().zip(c) {
                    *r -= delta * v;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < LASSO_TOLERANCE {
            break;
        }
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(LassoFit {
        coefficients: w,
        intercept,
        sweeps,
    })
}
