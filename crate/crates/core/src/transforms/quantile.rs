//! Log-quantile-density transform.
//!
//! The transformed function lives on a uniform probability grid on `[0, 1]`
//! with as many points as the time grid. The quantile function is scaled
//! affinely in both axes (`[0, 1] -> [0, 1]`), so the uniform density maps to
//! zero on every interval.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{interp_linear, Grid, GridFunction};
use crate::warping::{finite_difference, DensityFunction};

/// Uniform grid on `[0, 1]` with `n` points.
pub fn probability_grid(n: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::uniform(0.0, 1.0, n)?))
}

/// `-log f(Q(p))`, computed as the log of the finite-difference derivative of
/// the quantile function `Q`, itself obtained by inverting the cumulative
/// distribution with monotone linear interpolation.
pub fn log_quantile_forward(f: &DensityFunction) -> Result<GridFunction> {
    let time = f.grid();
    let cum = f.inner().cumulative_integral();
    let total = cum.last();
    let cdf: Vec<f64> = cum.values().iter().map(|c| c / total).collect();
    if let Some(j) = cdf.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::QuantileInversion { index: j + 1 });
    }

    let probs = probability_grid(time.len())?;
    let (a, eta) = (time.a(), time.eta());
    let scaled_time: Vec<f64> = time.points().iter().map(|t| (t - a) / eta).collect();
    let quantile: Vec<f64> = probs
        .points()
        .iter()
        .map(|&p| interp_linear(&cdf, &scaled_time, p))
        .collect();
    let quantile = GridFunction::new(probs, quantile)?;
    let qd = finite_difference(&quantile);
    if let Some(index) = qd.values().iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::QuantileInversion { index });
    }
    qd.map(f64::ln)
}

/// Integrates the quantile density `exp(u)` to a quantile function, inverts it
/// on `time_grid` and differentiates the resulting distribution function.
pub fn log_quantile_inverse(u: &GridFunction, time_grid: &Arc<Grid>) -> Result<DensityFunction> {
    if u.len() != time_grid.len() {
        return Err(Error::LengthMismatch {
            expected: time_grid.len(),
            actual: u.len(),
        });
    }
    let shift = u.max();
    let qd = u.map(|x| (x - shift).exp())?;
    let cum = qd.cumulative_integral();
    let total = cum.last();
    let (a, eta) = (time_grid.a(), time_grid.eta());
    let quantile: Vec<f64> = cum.values().iter().map(|c| a + eta * c / total).collect();
    let probs = u.grid().points();

    let n = time_grid.len();
    let mut warp: Vec<f64> = time_grid
        .points()
        .iter()
        .map(|&t| a + eta * interp_linear(&quantile, probs, t))
        .collect();
    warp[0] = a;
    warp[n - 1] = time_grid.b();
    DensityFunction::normalize(finite_difference(&GridFunction::new(
        Arc::clone(time_grid),
        warp,
    )?))
}
