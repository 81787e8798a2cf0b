//! Square-root velocity functions and their tangent-space linearization.
//!
//! `srvf_forward` maps a warping onto the positive orthant of the sphere of
//! radius `sqrt(eta)` in L2. `tangent_project` and `tangent_inverse` move
//! between that sphere and the tangent space at a reference point `mu`.
//! The projection's image is a strict subset of the tangent space, and the
//! inverse map reaches the whole sphere, so back-transformed results may leave
//! the positive orthant; [`check_image_membership`] evaluates the necessary
//! conditions for a tangent vector to lie in the projection's image.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::warping::{derivative, inverse_derivative, DensityFunction, WarpingFunction};

/// Relative tolerance on `||q||^2 = eta`.
pub const SRVF_NORM_TOL: f64 = 1e-6;
/// Absolute tolerance on `<v, mu> = 0`.
pub const TANGENCY_TOL: f64 = 1e-6;
/// Below this angle (or tangent norm) the limiting forms of the maps are used.
pub const SMALL_ANGLE: f64 = 1e-8;
/// Floor applied to `s^2` before integrating back to a warping.
pub const SQUARE_FLOOR: f64 = 1e-12;

/// A nonnegative function with `||q||^2 = eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Srvf {
    inner: GridFunction,
}

impl Srvf {
    pub fn new(inner: GridFunction) -> Result<Self> {
        if let Some(j) = inner.values().iter().position(|&v| v < 0.0) {
            return Err(Error::Parameter(format!(
                "SRVF has a negative value at index {j}"
            )));
        }
        let eta = inner.grid().eta();
        let nsq = inner.norm_squared();
        if (nsq - eta).abs() > SRVF_NORM_TOL * eta {
            return Err(Error::Parameter(format!(
                "SRVF has squared norm {nsq}, expected {eta}"
            )));
        }
        Ok(Srvf { inner })
    }

    /// `q0 = 1`, the SRVF of the identity warping.
    pub fn identity(grid: Arc<Grid>) -> Self {
        Srvf {
            inner: GridFunction::constant(grid, 1.0).expect("finite"),
        }
    }

    pub fn inner(&self) -> &GridFunction {
        &self.inner
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.inner.grid()
    }
}

/// An element of the tangent space at `mu`: `<v, mu> = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    inner: GridFunction,
    mu: Srvf,
}

impl TangentVector {
    pub fn new(inner: GridFunction, mu: Srvf) -> Result<Self> {
        let ip = inner.inner_product(&mu.inner)?;
        if ip.abs() > TANGENCY_TOL {
            return Err(Error::Parameter(format!(
                "vector is not tangent at mu (<v, mu> = {ip})"
            )));
        }
        Ok(TangentVector { inner, mu })
    }

    /// Orthogonal projection of an arbitrary function onto the tangent space.
    pub fn project(inner: GridFunction, mu: Srvf) -> Result<Self> {
        let ip = inner.inner_product(&mu.inner)?;
        let inner = inner.axpy(-ip / mu.inner.norm_squared(), &mu.inner)?;
        Ok(TangentVector { inner, mu })
    }

    pub fn inner(&self) -> &GridFunction {
        &self.inner
    }

    pub fn into_inner(self) -> GridFunction {
        self.inner
    }

    pub fn mu(&self) -> &Srvf {
        &self.mu
    }

    pub fn norm(&self) -> f64 {
        self.inner.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentProjection {
    pub vector: TangentVector,
    /// Angle between `q` and `mu`; equals `||vector||`.
    pub theta: f64,
    /// `q` is numerically orthogonal to `mu` (a step-like warping).
    pub degenerate: bool,
}

/// A point on the full sphere `||s||^2 = eta`, possibly with negative values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    pub s: GridFunction,
    pub in_positive_orthant: bool,
}

/// Necessary conditions for membership in the image of [`tangent_project`]
/// (with `mu = q0`): `||v|| <= pi/2`, `v >= -eta^{-1/2}` and tangency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageDiagnostics {
    pub norm_v: f64,
    pub min_v: f64,
    pub theta_bound_ok: bool,
    pub pointwise_ok: bool,
    pub tangency_ok: bool,
}

impl ImageDiagnostics {
    pub fn all_ok(&self) -> bool {
        self.theta_bound_ok && self.pointwise_ok && self.tangency_ok
    }
}

/// `q = sqrt(gamma')`.
pub fn srvf_forward(gamma: &WarpingFunction) -> Srvf {
    let density = derivative(gamma);
    Srvf {
        inner: density
            .inner()
            .map(f64::sqrt)
            .expect("sqrt of nonnegative values"),
    }
}

pub fn tangent_project(q: &Srvf, mu: &Srvf) -> Result<TangentProjection> {
    let eta = q.grid().eta();
    let cos_theta = (q.inner.inner_product(&mu.inner)? / eta).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let inner = if theta < SMALL_ANGLE {
        q.inner.sub(&mu.inner)?.scale(eta.powf(-0.5))
    } else {
        q.inner
            .axpy(-cos_theta, &mu.inner)?
            .scale(theta / (eta.sqrt() * theta.sin()))
    };
    let degenerate = (theta - FRAC_PI_2).abs() < SMALL_ANGLE;
    if degenerate {
        warn!("SRVF is orthogonal to the reference point (theta = pi/2); the warping is near a step function");
    }
    Ok(TangentProjection {
        vector: TangentVector {
            inner,
            mu: mu.clone(),
        },
        theta,
        degenerate,
    })
}

pub fn tangent_inverse(v: &TangentVector) -> SpherePoint {
    let norm = v.norm();
    let s = if norm < SMALL_ANGLE {
        v.mu.inner.clone()
    } else {
        let eta = v.mu.grid().eta();
        v.mu.inner
            .scale(norm.cos())
            .axpy(eta.sqrt() * norm.sin() / norm, &v.inner)
            .expect("same grid")
    };
    let in_positive_orthant = s.min() >= 0.0;
    SpherePoint {
        s,
        in_positive_orthant,
    }
}

/// `gamma(t) = a + integral of s(u)^2`, with `s^2` floored at [`SQUARE_FLOOR`].
///
/// Any function with positive mass gives a valid warping, including
/// functions with sign changes.
pub fn srvf_inverse(s: &GridFunction) -> Result<WarpingFunction> {
    Ok(inverse_derivative(&squared_density(s)?))
}

pub(crate) fn squared_density(s: &GridFunction) -> Result<DensityFunction> {
    DensityFunction::normalize(s.map(|x| (x * x).max(SQUARE_FLOOR))?)
}

pub fn check_image_membership(v: &TangentVector) -> ImageDiagnostics {
    let eta = v.mu.grid().eta();
    let norm_v = v.norm();
    let min_v = v.inner.min();
    let ip = v
        .inner
        .inner_product(&v.mu.inner)
        .expect("tangent vector shares the grid of mu");
    ImageDiagnostics {
        norm_v,
        min_v,
        theta_bound_ok: norm_v <= FRAC_PI_2 + SMALL_ANGLE,
        pointwise_ok: min_v >= -eta.powf(-0.5) - SMALL_ANGLE,
        tangency_ok: ip.abs() <= TANGENCY_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warping::validate_warping;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(0.0, 1.0, n).unwrap())
    }

    fn power(grid: &Arc<Grid>, k: f64) -> WarpingFunction {
        validate_warping(GridFunction::from_fn(grid.clone(), |t| t.powf(k)).unwrap()).unwrap()
    }

    #[test]
    fn forward_examples() {
        let g = unit(201);
        let q = srvf_forward(&WarpingFunction::identity(g.clone()));
        assert!(q.inner().values().iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let k = 2.0;
        let q = srvf_forward(&power(&g, k));
        let p = g.points();
        for j in (10..200).step_by(10) {
            let exact = (k * p[j].powf(k - 1.0)).sqrt();
            assert!((q.inner().values()[j] - exact).abs() < 1e-2);
        }
        for k in [0.3, 1.0, 2.5, 5.0] {
            let q = srvf_forward(&power(&g, k));
            assert!((q.inner().norm_squared() - 1.0).abs() < 1e-6);
            assert!(Srvf::new(q.inner().clone()).is_ok());
        }
    }

    #[test]
    fn projection_of_mu_is_zero() {
        let g = unit(51);
        let mu = Srvf::identity(g);
        let p = tangent_project(&mu, &mu).unwrap();
        assert_eq!(p.theta, 0.0);
        assert!(p.vector.inner().values().iter().all(|&v| v == 0.0));
        assert!(!p.degenerate);
    }

    #[test]
    fn projection_angle_for_quartic() {
        let g = unit(201);
        // the trapezoid rule does not integrate 4t^3 to exactly 1, so normalize first
        let raw = GridFunction::from_fn(g.clone(), |t| 4.0 * t * t * t).unwrap();
        let d = DensityFunction::normalize(raw).unwrap();
        let q = Srvf::new(d.inner().map(f64::sqrt).unwrap()).unwrap();
        let p = tangent_project(&q, &Srvf::identity(g)).unwrap();
        assert!((p.theta - 0.8_f64.acos()).abs() < 1e-3, "theta={}", p.theta);
        assert!((p.vector.norm() - 0.8_f64.acos()).abs() < 1e-3);
        assert!((p.vector.norm() - p.theta).abs() < 1e-9);
    }

    #[test]
    fn projection_is_tangent_on_non_unit_interval() {
        let g = Arc::new(Grid::uniform(2.0, 5.0, 101).unwrap());
        let mu = Srvf::identity(g.clone());
        let gamma = validate_warping(
            GridFunction::from_fn(g.clone(), |t| 2.0 + 3.0 * ((t - 2.0) / 3.0).powf(1.7)).unwrap(),
        )
        .unwrap();
        let p = tangent_project(&srvf_forward(&gamma), &mu).unwrap();
        assert!(p.vector.inner().inner_product(mu.inner()).unwrap().abs() < 1e-10);
        assert!((p.vector.norm() - p.theta).abs() < 1e-9);
        let back = tangent_inverse(&p.vector);
        assert!((back.s.norm_squared() - 3.0).abs() < 1e-9);
        assert!(back.s.sup_distance(srvf_forward(&gamma).inner()).unwrap() < 1e-9);
    }

    #[test]
    fn degenerate_projection_is_flagged() {
        let g = unit(11);
        // all mass on one grid cell: q is orthogonal to q0 except on that cell
        let mut vals = vec![0.0; 11];
        vals[5] = (1.0f64 / 0.1).sqrt();
        let q = GridFunction::new(g.clone(), vals).unwrap();
        let q = Srvf {
            inner: q.scale(1.0 / q.norm()),
        };
        // zero out the overlap by using a mu supported elsewhere
        let mut mvals = vec![1.0 / 0.9f64.sqrt(); 11];
        mvals[4] = 0.0;
        mvals[5] = 0.0;
        mvals[6] = 0.0;
        let m = GridFunction::new(g, mvals).unwrap();
        let mu = Srvf {
            inner: m.scale(1.0 / m.norm()),
        };
        let p = tangent_project(&q, &mu).unwrap();
        assert!(p.degenerate);
        assert!((p.theta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_zero_is_mu() {
        let g = unit(21);
        let mu = Srvf::identity(g.clone());
        let v = TangentVector::new(GridFunction::zeros(g), mu.clone()).unwrap();
        let s = tangent_inverse(&v);
        assert_eq!(&s.s, mu.inner());
        assert!(s.in_positive_orthant);
    }

    #[test]
    fn tangent_inverse_stays_on_sphere() {
        let g = unit(101);
        let mu = Srvf::identity(g.clone());
        for (j, target) in [0.1, 1.0, 2.0, 3.0].iter().enumerate() {
            let raw =
                GridFunction::from_fn(g.clone(), |t| ((j + 1) as f64 * 3.0 * t).sin() + t * t)
                    .unwrap();
            let v = TangentVector::project(raw, mu.clone()).unwrap();
            let v = TangentVector::new(v.inner().scale(target / v.norm()), mu.clone()).unwrap();
            let s = tangent_inverse(&v);
            assert!((s.s.norm_squared() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn tangent_vector_rejects_non_tangent() {
        let g = unit(11);
        let mu = Srvf::identity(g.clone());
        assert!(
            TangentVector::new(GridFunction::constant(g.clone(), 0.5).unwrap(), mu.clone())
                .is_err()
        );
        let v = TangentVector::project(GridFunction::from_fn(g, |t| t).unwrap(), mu).unwrap();
        assert!(v.inner().integrate().abs() < 1e-14);
    }

    #[test]
    fn srvf_inverse_examples() {
        let g = unit(101);
        let id = srvf_inverse(&GridFunction::constant(g.clone(), 1.0).unwrap()).unwrap();
        assert!(
            id.inner()
                .sup_distance(&GridFunction::from_fn(g.clone(), |t| t).unwrap())
                .unwrap()
                < 1e-12
        );

        let mut prev = f64::INFINITY;
        for n in [101, 201, 401] {
            let g = unit(n);
            let gamma = power(&g, 2.0);
            let err = srvf_inverse(srvf_forward(&gamma).inner())
                .unwrap()
                .inner()
                .sup_distance(gamma.inner())
                .unwrap();
            assert!(
                err < 10.0 * g.max_spacing() && err < prev,
                "n={n} err={err}"
            );
            prev = err;
        }

        // sign changes still give a valid warping
        let s = GridFunction::from_fn(g, |t| (6.0 * t).cos() * 1.3).unwrap();
        let gamma = srvf_inverse(&s).unwrap();
        assert!(validate_warping(gamma.inner().clone()).is_ok());
    }

    #[test]
    fn image_membership_examples() {
        let g = unit(201);
        let mu = Srvf::identity(g.clone());
        let zero = TangentVector::new(GridFunction::zeros(g.clone()), mu.clone()).unwrap();
        assert!(check_image_membership(&zero).all_ok());

        for k in [0.2, 0.7, 1.3, 5.0] {
            let p = tangent_project(&srvf_forward(&power(&g, k)), &mu).unwrap();
            assert!(check_image_membership(&p.vector).all_ok(), "k={k}");
        }

        // unit-norm function dipping well below -1
        let raw = GridFunction::from_fn(g.clone(), |t| 1.0 + (t + 1e-3).ln()).unwrap();
        let v = TangentVector::project(raw, mu).unwrap();
        let v = TangentVector::new(v.inner().scale(1.0 / v.norm()), v.mu().clone()).unwrap();
        let d = check_image_membership(&v);
        assert!(!d.pointwise_ok);
        assert!(d.theta_bound_ok && d.tangency_ok);
    }
}
