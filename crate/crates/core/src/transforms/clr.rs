//! Centred log-ratio transform and the Bayes-space operations on densities.
//!
//! The clr transform is an isometric isomorphism from the Bayes space onto the
//! zero-integral subspace of L2, so perturbation, powering and the Bayes inner
//! product become addition, scalar multiplication and the L2 inner product.

use log::warn;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::warping::DensityFunction;

/// Densities are floored at `CLR_FLOOR * eta` before taking logarithms.
pub const CLR_FLOOR: f64 = 1e-10;

/// Output of [`clr_forward_counted`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClrResult {
    pub value: GridFunction,
    /// Number of grid points where the density was below the floor.
    pub floored: usize,
}

/// `log f(t) - (1/eta) * integral of log f`.
///
/// Values below the floor are raised to it and a warning is logged.
pub fn clr_forward(f: &DensityFunction) -> GridFunction {
    clr_forward_counted(f).value
}

pub fn clr_forward_counted(f: &DensityFunction) -> ClrResult {
    let (logs, floored) = floored_log(f.inner());
    if floored > 0 {
        warn!("clr: {floored} density values below the floor were raised to it");
    }
    let eta = logs.grid().eta();
    let mean = logs.integrate() / eta;
    ClrResult {
        value: logs.map(|l| l - mean).expect("finite"),
        floored,
    }
}

/// `eta * exp(v) / integral of exp(v)`; defined for every finite `v`.
pub fn clr_inverse(v: &GridFunction) -> DensityFunction {
    let shift = v.max();
    let e = v
        .map(|x| (x - shift).exp())
        .expect("exp of nonpositive values is finite");
    DensityFunction::normalize(e).expect("exp(0) = 1 at the maximum gives positive mass")
}

/// Perturbation: `f * g / integral(f * g)`, rescaled to mass `eta`.
pub fn bayes_perturb(f: &DensityFunction, g: &DensityFunction) -> Result<DensityFunction> {
    let floor = CLR_FLOOR * f.grid().eta();
    let prod = f
        .inner()
        .zip_map(g.inner(), |x, y| x.max(floor) * y.max(floor))?;
    DensityFunction::normalize(prod)
}

/// Powering: `f^alpha / integral(f^alpha)`, rescaled to mass `eta`.
pub fn bayes_power(alpha: f64, f: &DensityFunction) -> Result<DensityFunction> {
    let floor = CLR_FLOOR * f.grid().eta();
    DensityFunction::normalize(f.inner().map(|x| x.max(floor).powf(alpha))?)
}

/// Bayes inner product, evaluated through the isometry as `<clr f, clr g>`.
pub fn bayes_inner(f: &DensityFunction, g: &DensityFunction) -> Result<f64> {
    clr_forward(f).inner_product(&clr_forward(g))
}

fn floored_log(f: &GridFunction) -> (GridFunction, usize) {
    let floor = CLR_FLOOR * f.grid().eta();
    let floored = f.values().iter().filter(|&&v| v < floor).count();
    let logs = f
        .map(|v| v.max(floor).ln())
        .expect("log of positive values is finite");
    (logs, floored)
}
