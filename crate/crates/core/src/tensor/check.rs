use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Compares the tape gradient of a scalar function against central
/// differences and returns the largest relative error over all entries of
/// `x`, where the error of one entry is
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check<F>(f: F, x: &Tensor, step: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return Err(Error::arg(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let y = f(&tape, xv)?;
    let analytic = y.backward()?.get(xv);

    let eval = |t: Tensor| -> Result<f64> {
        let tape = Tape::new();
        let v = tape.constant(t);
        let y = f(&tape, v)?.scalar()?;
        if !y.is_finite() {
            return Err(Error::NonFinite("grad_check objective"));
        }
        Ok(y)
    };

    let mut worst = 0.0f64;
    for i in 0..x.data().len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += step;
        let mut minus = x.clone();
        minus.data_mut()[i] -= step;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * step);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(err);
    }
    Ok(worst)
}
