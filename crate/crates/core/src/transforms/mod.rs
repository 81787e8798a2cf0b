//! Maps from warping functions to L2 and back.
//!
//! Every transform factors as `Psi = psi ∘ D`, where `D` takes a warping to
//! its density and `psi` maps densities to L2. [`Transform::forward`] and
//! [`Transform::inverse`] implement `Psi` and `D^{-1} ∘ psi^{-1}`; the
//! density-level maps are exposed as [`Transform::forward_density`] and
//! [`Transform::inverse_density`].

pub mod clr;
pub mod hazard;
pub mod quantile;
pub mod srvf;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::warping::{derivative, inverse_derivative, DensityFunction, WarpingFunction};

pub use clr::{
    bayes_inner, bayes_perturb, bayes_power, clr_forward, clr_forward_counted, clr_inverse,
};
pub use hazard::{log_hazard_forward, log_hazard_inverse, DEFAULT_DELTA};
pub use quantile::{log_quantile_forward, log_quantile_inverse, probability_grid};
pub use srvf::{
    check_image_membership, srvf_forward, srvf_inverse, tangent_inverse, tangent_project,
    ImageDiagnostics, SpherePoint, Srvf, TangentProjection, TangentVector,
};

/// Which transform to apply, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// Square-root velocity function followed by projection onto the tangent
    /// space at `mu`; `None` means `mu = q0 = 1`.
    SrvfTangent { mu: Option<Srvf> },
    /// Centred log-ratio of the density.
    Clr,
    /// Log-hazard on `[a, b - delta * eta]`.
    LogHazard { delta: f64 },
    /// Log-quantile density, on the probability grid.
    LogQuantile,
}

impl Transform {
    pub fn srvf() -> Self {
        Transform::SrvfTangent { mu: None }
    }

    pub fn log_hazard(delta: f64) -> Result<Self> {
        hazard::validate_delta(delta)?;
        Ok(Transform::LogHazard { delta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Transform::SrvfTangent { .. } => "srvf",
            Transform::Clr => "clr",
            Transform::LogHazard { .. } => "log-hazard",
            Transform::LogQuantile => "log-quantile",
        }
    }

    /// Grid on which transformed functions live for warpings on `time_grid`.
    pub fn output_grid(&self, time_grid: &Arc<Grid>) -> Result<Arc<Grid>> {
        match self {
            Transform::LogQuantile => probability_grid(time_grid.len()),
            _ => Ok(Arc::clone(time_grid)),
        }
    }

    fn mu(&self, grid: &Arc<Grid>) -> Result<Srvf> {
        match self {
            Transform::SrvfTangent { mu: Some(mu) } => {
                if same_grid(mu.grid(), grid) {
                    Ok(mu.clone())
                } else {
                    Err(Error::GridMismatch)
                }
            }
            _ => Ok(Srvf::identity(Arc::clone(grid))),
        }
    }

    /// The density-level map `psi`.
    pub fn forward_density(&self, f: &DensityFunction) -> Result<GridFunction> {
        match self {
            Transform::SrvfTangent { .. } => {
                let q = Srvf::new(f.inner().map(f64::sqrt)?)?;
                let mu = self.mu(f.grid())?;
                Ok(tangent_project(&q, &mu)?.vector.into_inner())
            }
            Transform::Clr => Ok(clr_forward(f)),
            Transform::LogHazard { delta } => log_hazard_forward(f, *delta),
            Transform::LogQuantile => log_quantile_forward(f),
        }
    }

    /// The density-level inverse `psi^{-1}`, returning a density on `time_grid`.
    ///
    /// For the SRVF transform `v` is first projected onto the tangent space.
    pub fn inverse_density(
        &self,
        v: &GridFunction,
        time_grid: &Arc<Grid>,
    ) -> Result<DensityFunction> {
        if !matches!(self, Transform::LogQuantile) && !same_grid(v.grid(), time_grid) {
            return Err(Error::GridMismatch);
        }
        match self {
            Transform::SrvfTangent { .. } => {
                let mu = self.mu(time_grid)?;
                let tangent = TangentVector::project(v.clone(), mu)?;
                srvf::squared_density(&tangent_inverse(&tangent).s)
            }
            Transform::Clr => Ok(clr_inverse(v)),
            Transform::LogHazard { delta } => log_hazard_inverse(v, *delta),
            Transform::LogQuantile => log_quantile_inverse(v, time_grid),
        }
    }

    /// `Psi(gamma) = psi(D gamma)`.
    pub fn forward(&self, gamma: &WarpingFunction) -> Result<GridFunction> {
        self.forward_density(&derivative(gamma))
    }

    /// `Psi^{-1}(v) = D^{-1}(psi^{-1} v)`; always a valid warping on `time_grid`.
    pub fn inverse(&self, v: &GridFunction, time_grid: &Arc<Grid>) -> Result<WarpingFunction> {
        Ok(inverse_derivative(&self.inverse_density(v, time_grid)?))
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::LogHazard { delta } => write!(f, "log-hazard(delta={delta})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `srvf`, `clr`, `log-hazard` (default delta) or `log-quantile`.
impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "srvf" | "srvf-tangent" => Ok(Transform::srvf()),
            "clr" => Ok(Transform::Clr),
            "log-hazard" | "hazard" => Ok(Transform::LogHazard {
                delta: DEFAULT_DELTA,
            }),
            "log-quantile" | "quantile" => Ok(Transform::LogQuantile),
            other => Err(Error::Parameter(format!("unknown transform '{other}'"))),
        }
    }
}
