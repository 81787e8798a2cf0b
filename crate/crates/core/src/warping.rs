//! Warping functions, their densities, and the differential operator between them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Absolute tolerance on `gamma(a) = a` and `gamma(b) = b`.
pub const ENDPOINT_TOL: f64 = 1e-10;
/// Relative tolerance on a density integrating to `eta`.
pub const DENSITY_MASS_TOL: f64 = 1e-8;
/// Lower bound applied to densities before integrating them back to a warping,
/// so that the result is strictly increasing.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// A nonnegative function integrating to `eta = b - a`: the canonical
/// representative of a density class, and the derivative of a warping function.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunction {
    inner: GridFunction,
}

impl DensityFunction {
    /// Checks nonnegativity and total mass.
    pub fn new(inner: GridFunction) -> Result<Self> {
        if let Some(j) = inner.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidDensity(format!(
                "negative value at index {j}"
            )));
        }
        let eta = inner.grid().eta();
        let mass = inner.integrate();
        if (mass - eta).abs() > DENSITY_MASS_TOL * eta {
            return Err(Error::InvalidDensity(format!(
                "integrates to {mass}, expected {eta}"
            )));
        }
        Ok(DensityFunction { inner })
    }

    /// Clips negative values to zero and rescales to total mass `eta`.
    pub fn normalize(raw: GridFunction) -> Result<Self> {
        let clipped = raw.map(|v| v.max(0.0))?;
        let mass = clipped.integrate();
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidDensity(format!(
                "cannot normalize a function with mass {mass}"
            )));
        }
        let eta = clipped.grid().eta();
        Ok(DensityFunction {
            inner: clipped.scale(eta / mass),
        })
    }

    /// The uniform density, `f = 1`.
    pub fn uniform(grid: Arc<Grid>) -> Self {
        DensityFunction {
            inner: GridFunction::constant(grid, 1.0).expect("constant is finite"),
        }
    }

    pub fn inner(&self) -> &GridFunction {
        &self.inner
    }

    pub fn into_inner(self) -> GridFunction {
        self.inner
    }

    pub fn values(&self) -> &[f64] {
        self.inner.values()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.inner.grid()
    }
}

/// An endpoint-pinned, strictly increasing map of `[a, b]` onto itself.
///
/// A warping may carry its exact derivative, in which case [`derivative`]
/// returns it instead of a finite-difference estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingFunction {
    inner: GridFunction,
    density: Option<DensityFunction>,
}

impl WarpingFunction {
    pub fn identity(grid: Arc<Grid>) -> Self {
        let values = grid.points().to_vec();
        WarpingFunction {
            inner: GridFunction::new(Arc::clone(&grid), values).expect("grid points are finite"),
            density: Some(DensityFunction::uniform(grid)),
        }
    }

    /// Attaches a known derivative. The density is normalized to mass `eta`.
    pub fn with_density(mut self, density: GridFunction) -> Result<Self> {
        self.inner.ensure_same_grid(&density)?;
        self.density = Some(DensityFunction::normalize(density)?);
        Ok(self)
    }

    /// Drops an attached derivative, so that [`derivative`] falls back to
    /// finite differences.
    pub fn without_density(mut self) -> Self {
        self.density = None;
        self
    }

    pub fn density(&self) -> Option<&DensityFunction> {
        self.density.as_ref()
    }

    pub fn inner(&self) -> &GridFunction {
        &self.inner
    }

    pub fn values(&self) -> &[f64] {
        self.inner.values()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.inner.grid()
    }
}

/// Validates `raw` as an element of the warping space.
///
/// Endpoints within [`ENDPOINT_TOL`] are accepted and pinned exactly.
/// Strict monotonicity is checked at grid resolution.
pub fn validate_warping(raw: GridFunction) -> Result<WarpingFunction> {
    let grid = Arc::clone(raw.grid());
    let (a, b) = (grid.a(), grid.b());
    let n = raw.len();
    let mut values = raw.into_values();

    let mut bad_ends = Vec::new();
    if (values[0] - a).abs() > ENDPOINT_TOL {
        bad_ends.push(0);
    }
    if (values[n - 1] - b).abs() > ENDPOINT_TOL {
        bad_ends.push(n - 1);
    }
    if !bad_ends.is_empty() {
        return Err(Error::Endpoint { indices: bad_ends });
    }
    values[0] = a;
    values[n - 1] = b;

    let bad: Vec<usize> = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] <= w[0])
        .map(|(j, _)| j + 1)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Monotonicity { indices: bad });
    }

    Ok(WarpingFunction {
        inner: GridFunction::new(grid, values)?,
        density: None,
    })
}

/// Finite-difference derivative: central differences at interior points,
/// one-sided differences at the endpoints.
pub fn finite_difference(f: &GridFunction) -> GridFunction {
    let t = f.grid().points();
    let y = f.values();
    let n = y.len();
    let mut d = Vec::with_capacity(n);
    d.push((y[1] - y[0]) / (t[1] - t[0]));
    for j in 1..n - 1 {
        d.push((y[j + 1] - y[j - 1]) / (t[j + 1] - t[j - 1]));
    }
    d.push((y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]));
    GridFunction::new(Arc::clone(f.grid()), d).expect("differences of finite values are finite")
}

/// The differential operator `D`: maps a warping to its density.
///
/// Uses the attached exact derivative when present; otherwise finite
/// differences, clipped at zero and rescaled so the result integrates to `eta`.
pub fn derivative(gamma: &WarpingFunction) -> DensityFunction {
    if let Some(d) = &gamma.density {
        return d.clone();
    }
    DensityFunction::normalize(finite_difference(&gamma.inner))
        .expect("a strictly increasing warping has positive mass")
}

/// Inverse of `D`: `gamma(t) = a + integral of f from a to t`, endpoints pinned.
///
/// The density is floored at [`DENSITY_FLOOR`] so the result is strictly
/// increasing; the floored density is attached to the returned warping.
pub fn inverse_derivative(f: &DensityFunction) -> WarpingFunction {
    let grid = Arc::clone(f.grid());
    let floored = f
        .inner
        .map(|v| v.max(DENSITY_FLOOR))
        .expect("floored density is finite");
    let density = DensityFunction::normalize(floored).expect("floored density has positive mass");
    let cum = density.inner.cumulative_integral();
    let (a, b, eta) = (grid.a(), grid.b(), grid.eta());
    let total = cum.last();
    let n = cum.len();
    let mut values: Vec<f64> = cum.values().iter().map(|c| a + eta * c / total).collect();
    values[0] = a;
    values[n - 1] = b;
    WarpingFunction {
        inner: GridFunction::new(grid, values).expect("finite"),
        density: Some(density),
    }
}

/// `w ∘ gamma` by linear interpolation of `w` at the warped abscissae.
pub fn compose(w: &GridFunction, gamma: &WarpingFunction) -> Result<GridFunction> {
    w.ensure_same_grid(gamma.inner())?;
    gamma.inner.map(|s| w.eval(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(0.0, 1.0, n).unwrap())
    }

    fn power(n: usize, k: f64) -> WarpingFunction {
        validate_warping(GridFunction::from_fn(unit(n), |t| t.powf(k)).unwrap()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate_warping(GridFunction::from_fn(unit(11), |t| t).unwrap()).is_ok());
        assert!(validate_warping(GridFunction::from_fn(unit(11), |t| t * t).unwrap()).is_ok());
        for k in [0.1, 0.5, 3.0, 10.0] {
            assert!(
                validate_warping(GridFunction::from_fn(unit(51), |t| t.powf(k)).unwrap()).is_ok()
            );
        }

        let mut v: Vec<f64> = unit(11).points().to_vec();
        v[10] = 0.9;
        let raw = GridFunction::new(unit(11), v).unwrap();
        assert_eq!(
            validate_warping(raw),
            Err(Error::Endpoint { indices: vec![10] })
        );
    }

    #[test]
    fn validate_reports_monotonicity_indices() {
        let raw = GridFunction::new(unit(6), vec![0.0, 0.3, 0.2, 0.6, 0.6, 1.0]).unwrap();
        assert_eq!(
            validate_warping(raw),
            Err(Error::Monotonicity {
                indices: vec![2, 4]
            })
        );
    }

    #[test]
    fn validate_pins_endpoints() {
        let raw = GridFunction::new(unit(3), vec![1e-11, 0.5, 1.0 - 1e-11]).unwrap();
        let w = validate_warping(raw).unwrap();
        assert_eq!(w.values()[0], 0.0);
        assert_eq!(w.values()[2], 1.0);
    }

    #[test]
    fn derivative_examples() {
        let id = validate_warping(GridFunction::from_fn(unit(21), |t| t).unwrap()).unwrap();
        assert!(derivative(&id)
            .values()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));

        let sq = power(201, 2.0);
        let d = derivative(&sq);
        let p = sq.grid().points();
        let err = (1..200)
            .map(|j| (d.values()[j] - 2.0 * p[j]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "err={err}");

        let quartic = power(201, 4.0);
        let d = derivative(&quartic);
        assert!((d.inner().integrate() - 1.0).abs() < 1e-12);
        let err = (1..200)
            .map(|j| (d.values()[j] - 4.0 * p[j].powi(3)).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-2, "err={err}");
    }

    #[test]
    fn derivative_uses_attached_density() {
        let g = unit(11);
        let w = power(11, 2.0)
            .with_density(GridFunction::from_fn(g, |t| 2.0 * t).unwrap())
            .unwrap();
        let d = derivative(&w);
        assert!((d.values()[10] - 2.0).abs() < 1e-14);
        assert!((d.values()[0]).abs() < 1e-14);
    }

    #[test]
    fn inverse_derivative_examples() {
        let g = unit(51);
        let id = inverse_derivative(&DensityFunction::uniform(g.clone()));
        for (v, t) in id.values().iter().zip(g.points()) {
            assert!((v - t).abs() < 1e-12);
        }

        let cube = power(201, 3.0);
        let rt = inverse_derivative(&derivative(&cube));
        assert!(rt.inner().sup_distance(cube.inner()).unwrap() < 1e-2);

        let f = DensityFunction::normalize(GridFunction::from_fn(unit(201), |t| 2.0 * t).unwrap())
            .unwrap();
        let gamma = inverse_derivative(&f);
        let err = gamma
            .values()
            .iter()
            .zip(gamma.grid().points())
            .map(|(v, t)| (v - t * t).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "err={err}");
    }

    #[test]
    fn roundtrip_error_decreases_under_refinement() {
        for k in [0.5, 1.7, 3.0] {
            let mut prev = f64::INFINITY;
            for n in [51, 101, 201, 401] {
                let gamma = power(n, k);
                let err = inverse_derivative(&derivative(&gamma))
                    .inner()
                    .sup_distance(gamma.inner())
                    .unwrap();
                assert!(err < prev, "k={k} n={n} err={err} prev={prev}");
                prev = err;
            }
        }
    }

    #[test]
    fn inverse_derivative_handles_zero_runs() {
        let g = unit(11);
        let raw = GridFunction::new(
            g,
            vec![0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let gamma = inverse_derivative(&DensityFunction::normalize(raw).unwrap());
        assert!(validate_warping(gamma.inner().clone()).is_ok());
    }

    #[test]
    fn density_checks() {
        let g = unit(11);
        assert!(DensityFunction::new(GridFunction::constant(g.clone(), 2.0).unwrap()).is_err());
        assert!(DensityFunction::new(
            GridFunction::from_fn(g.clone(), |t| 1.0 - 2.0 * t + 1.0).unwrap()
        )
        .is_ok());
        assert!(DensityFunction::normalize(GridFunction::zeros(g.clone())).is_err());
        let d = DensityFunction::normalize(GridFunction::from_fn(g, |t| t - 0.5).unwrap()).unwrap();
        assert!(d.values().iter().all(|&v| v >= 0.0));
        assert!((d.inner().integrate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compose_matches_endpoints() {
        let g = unit(101);
        let w = GridFunction::from_fn(g.clone(), |t| (6.0 * t).sin()).unwrap();
        let gamma = power(101, 1.5);
        let x = compose(&w, &gamma).unwrap();
        assert_eq!(x.first(), w.first());
        assert_eq!(x.last(), w.last());
        let id = WarpingFunction::identity(g);
        assert_eq!(compose(&w, &id).unwrap(), w);
    }
}
