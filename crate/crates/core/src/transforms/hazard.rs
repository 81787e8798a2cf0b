//! Log-hazard transform.
//!
//! The warping is read as a distribution function `F(t) = (gamma(t) - a) / eta`
//! with density `f / eta`. Hazards diverge at the right end, so the transform
//! is evaluated on `[a, b - delta * eta]` only. The inverse integrates the
//! hazard with the trapezoid rule, which makes it the exact discrete inverse
//! of the forward map, and spreads the leftover mass uniformly on the tail.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::transforms::clr::CLR_FLOOR;
use crate::warping::DensityFunction;

pub const DEFAULT_DELTA: f64 = 0.05;

pub fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.5 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "delta must lie in (0, 0.5], got {delta}"
        )))
    }
}

/// Index of the last grid point in `[a, b - delta * eta]`.
pub fn cut_index(grid: &Grid, delta: f64) -> Result<usize> {
    validate_delta(delta)?;
    let cut = grid.b() - delta * grid.eta();
    let slack = 1e-12 * grid.eta();
    let j = grid.points().partition_point(|&t| t <= cut + slack);
    if j < 2 || j > grid.len() - 1 {
        return Err(Error::Parameter(format!(
            "delta = {delta} leaves no usable grid points before or after the cut"
        )));
    }
    Ok(j - 1)
}

/// `log(f / (1 - F))` on `[a, b - delta * eta]`, extended by its last value.
pub fn log_hazard_forward(f: &DensityFunction, delta: f64) -> Result<GridFunction> {
    let grid = Arc::clone(f.grid());
    let cut = cut_index(&grid, delta)?;
    let eta = grid.eta();
    let floor = CLR_FLOOR * eta;
    let cdf = f.inner().cumulative_integral();
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..=cut {
        let survival = 1.0 - cdf.values()[j] / eta;
        if survival <= 0.0 {
            return Err(Error::HazardOverflow { index: j });
        }
        let scaled = f.values()[j].max(floor) / eta;
        out.push((scaled / survival).ln());
    }
    let last = out[cut];
    out.resize(grid.len(), last);
    GridFunction::new(grid, out)
}

/// Rebuilds a density from a log-hazard. Values past the cut are ignored and
/// the density is constant there.
pub fn log_hazard_inverse(h: &GridFunction, delta: f64) -> Result<DensityFunction> {
    let grid = Arc::clone(h.grid());
    let cut = cut_index(&grid, delta)?;
    let t = grid.points();
    let hazard: Vec<f64> = h.values()[..=cut].iter().map(|v| v.exp()).collect();
    if let Some(index) = hazard.iter().position(|v| !v.is_finite()) {
        return Err(Error::HazardOverflow { index });
    }

    // scaled density f/eta = hazard * survival; trapezoid steps of S' = -hazard * S
    let mut scaled = Vec::with_capacity(grid.len());
    let mut survival = 1.0;
    scaled.push(hazard[0]);
    for j in 0..cut {
        let dt = t[j + 1] - t[j];
        let shrink = 1.0 - 0.5 * dt * hazard[j];
        if shrink <= 0.0 {
            return Err(Error::HazardOverflow { index: j + 1 });
        }
        survival *= shrink / (1.0 + 0.5 * dt * hazard[j + 1]);
        scaled.push(hazard[j + 1] * survival);
    }

    let dt = t[cut + 1] - t[cut];
    let remaining = survival - 0.5 * dt * scaled[cut];
    let tail = (remaining / (0.5 * dt + grid.b() - t[cut + 1])).max(0.0);
    scaled.resize(grid.len(), tail);

    let eta = grid.eta();
    DensityFunction::normalize(GridFunction::new(
        grid,
        scaled.into_iter().map(|v| v * eta).collect(),
    )?)
}
