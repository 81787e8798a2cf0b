//! Joint amplitude and phase PCA.
//!
//! Each observation is a registered function `w` and a warping `gamma`. The
//! warping is mapped to L2 by a [`Transform`], and PCA is carried out on the
//! pairs `z = (w, v)` under the weighted inner product
//! `<z1, z2>_w = <w1, w2> + C^2 <v1, v2>`.

use std::sync::Arc;

use log::debug;

use crate::error::{Error, Result};
use crate::fpca::{select_m, weighted_pca};
use crate::grid::{Grid, GridFunction};
use crate::transforms::Transform;
use crate::warping::{compose, WarpingFunction};

/// Registered function, warping and the observed curve `x = w ∘ gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    w: GridFunction,
    gamma: WarpingFunction,
    x: GridFunction,
}

impl JointSample {
    /// Builds a sample, computing `x = w ∘ gamma` by linear interpolation.
    pub fn new(w: GridFunction, gamma: WarpingFunction) -> Result<Self> {
        let x = compose(&w, &gamma)?;
        Ok(JointSample { w, gamma, x })
    }

    /// Builds a sample with a directly observed curve.
    pub fn with_observed(w: GridFunction, gamma: WarpingFunction, x: GridFunction) -> Result<Self> {
        w.ensure_same_grid(gamma.inner())?;
        w.ensure_same_grid(&x)?;
        Ok(JointSample { w, gamma, x })
    }

    pub fn w(&self) -> &GridFunction {
        &self.w
    }

    pub fn gamma(&self) -> &WarpingFunction {
        &self.gamma
    }

    pub fn x(&self) -> &GridFunction {
        &self.x
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.w.grid()
    }
}

/// Samples together with their transformed warpings `v_i = Psi(gamma_i)`.
#[derive(Debug, Clone)]
pub struct JointDataset {
    samples: Vec<JointSample>,
    transform: Transform,
    v: Vec<GridFunction>,
}

impl JointDataset {
    pub fn new(samples: Vec<JointSample>, transform: Transform) -> Result<Self> {
        let first = samples.first().ok_or(Error::InsufficientData {
            required: 1,
            actual: 0,
        })?;
        let grid = Arc::clone(first.grid());
        for s in &samples[1..] {
            s.w.ensure_same_grid(&first.w)?;
        }
        let v_grid = transform.output_grid(&grid)?;
        let v = samples
            .iter()
            .map(|s| {
                // transformed values are moved onto one shared output grid
                let v = transform.forward(&s.gamma)?;
                GridFunction::new(Arc::clone(&v_grid), v.into_values())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointDataset {
            samples,
            transform,
            v,
        })
    }

    pub fn samples(&self) -> &[JointSample] {
        &self.samples
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn v(&self) -> &[GridFunction] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_grid(&self) -> &Arc<Grid> {
        self.samples[0].grid()
    }

    pub fn v_grid(&self) -> &Arc<Grid> {
        self.v[0].grid()
    }
}

/// Sum of the explained and unexplained parts of the total variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    pub explained: f64,
    pub residual: f64,
    pub ratio: f64,
}

/// Reconstruction of an observation from truncated joint scores.
#[derive(Debug, Clone, PartialEq)]
pub struct JointReconstruction {
    pub w: GridFunction,
    pub v: GridFunction,
    pub gamma: WarpingFunction,
    pub x: GridFunction,
}

/// A fitted joint PCA.
///
/// Components `(phi_w[m], phi_v[m])` are orthonormal under the weighted inner
/// product with the model's `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPcaModel {
    pub transform: Transform,
    pub c: f64,
    pub mean_w: GridFunction,
    pub mean_v: GridFunction,
    pub phi_w: Vec<GridFunction>,
    pub phi_v: Vec<GridFunction>,
    pub nus: Vec<f64>,
    /// `scores[i][m]`.
    pub scores: Vec<Vec<f64>>,
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "weight C must be positive and finite, got {c}"
        )))
    }
}

/// PCA of the stacked functions `(w_i, C v_i)` with block trapezoid weights.
pub fn fit_joint(data: &JointDataset, c: f64) -> Result<JointPcaModel> {
    check_c(c)?;
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let tg = Arc::clone(data.time_grid());
    let vg = Arc::clone(data.v_grid());
    let nw = tg.len();

    let weights: Vec<f64> = tg.weights().iter().chain(vg.weights()).copied().collect();
    let stacked: Vec<Vec<f64>> = data
        .samples
        .iter()
        .zip(&data.v)
        .map(|(s, v)| {
            s.w.values()
                .iter()
                .copied()
                .chain(v.values().iter().map(|x| c * x))
                .collect()
        })
        .collect();
    let pca = weighted_pca(&stacked, &weights)?;

    let split = |z: &[f64], scale: f64| -> Result<(GridFunction, GridFunction)> {
        Ok((
            GridFunction::new(Arc::clone(&tg), z[..nw].to_vec())?,
            GridFunction::new(Arc::clone(&vg), z[nw..].iter().map(|x| x / scale).collect())?,
        ))
    };
    let (mean_w, mean_v) = split(&pca.mean, c)?;
    let mut phi_w = Vec::with_capacity(pca.eigenvectors.len());
    let mut phi_v = Vec::with_capacity(pca.eigenvectors.len());
    for e in &pca.eigenvectors {
        let (pw, pv) = split(e, c)?;
        phi_w.push(pw);
        phi_v.push(pv);
    }
    Ok(JointPcaModel {
        transform: data.transform.clone(),
        c,
        mean_w,
        mean_v,
        phi_w,
        phi_v,
        nus: pca.eigenvalues,
        scores: pca.scores,
    })
}

impl JointPcaModel {
    pub fn n_components(&self) -> usize {
        self.nus.len()
    }

    pub fn time_grid(&self) -> &Arc<Grid> {
        self.mean_w.grid()
    }

    /// `<(w1, v1), (w2, v2)>_w` with this model's weight.
    pub fn weighted_inner(
        &self,
        a: (&GridFunction, &GridFunction),
        b: (&GridFunction, &GridFunction),
    ) -> Result<f64> {
        Ok(a.0.inner_product(b.0)? + self.c * self.c * a.1.inner_product(b.1)?)
    }

    /// Scores of a new pair `(w, v)` on every component.
    pub fn project_scores(&self, w: &GridFunction, v: &GridFunction) -> Result<Vec<f64>> {
        let dw = w.sub(&self.mean_w)?;
        let dv = v.sub(&self.mean_v)?;
        self.phi_w
            .iter()
            .zip(&self.phi_v)
            .map(|(pw, pv)| self.weighted_inner((&dw, &dv), (pw, pv)))
            .collect()
    }

    /// Truncated expansion `mean + sum_{m < M} scores[m] phi_m`, blockwise.
    pub fn reconstruct_z(&self, scores: &[f64], m: usize) -> Result<(GridFunction, GridFunction)> {
        let available = self.n_components().min(scores.len());
        if m > available {
            return Err(Error::Truncation {
                requested: m,
                available,
            });
        }
        let mut w = self.mean_w.clone();
        let mut v = self.mean_v.clone();
        for ((rho, pw), pv) in scores.iter().zip(&self.phi_w).zip(&self.phi_v).take(m) {
            w = w.axpy(*rho, pw)?;
            v = v.axpy(*rho, pv)?;
        }
        Ok((w, v))
    }

    /// Reconstructs `w`, `gamma = Psi^{-1}(v)` and `x = w ∘ gamma`.
    pub fn reconstruct_x(&self, scores: &[f64], m: usize) -> Result<JointReconstruction> {
        let (w, v) = self.reconstruct_z(scores, m)?;
        let gamma = self.transform.inverse(&v, self.time_grid())?;
        let x = compose(&w, &gamma)?;
        Ok(JointReconstruction { w, v, gamma, x })
    }

    pub fn total_variance(&self) -> f64 {
        self.nus.iter().sum()
    }

    pub fn variance_decomposition(&self, m: usize) -> Result<VarianceDecomposition> {
        if m > self.n_components() {
            return Err(Error::Truncation {
                requested: m,
                available: self.n_components(),
            });
        }
        let explained: f64 = self.nus[..m].iter().sum();
        let residual: f64 = self.nus[m..].iter().sum();
        let total = explained + residual;
        Ok(VarianceDecomposition {
            explained,
            residual,
            ratio: if total > 0.0 { explained / total } else { 1.0 },
        })
    }

    pub fn select_m(&self, tau: f64) -> Result<usize> {
        select_m(&self.nus, tau)
    }
}

/// Concatenates `w` on `[a, b)` with `C v` shifted onto `[b, 2b - a]`.
///
/// The result lives on `2n - 1` points: the time grid without `b`, followed by
/// the time grid shifted by `eta`. The value at `b` is `C v(a)` and `w(b)` is
/// dropped. `v` is placed on the shifted time grid point by point, so for the
/// log-quantile transform its own grid spacing is not preserved.
pub fn concatenate_g(w: &GridFunction, v: &GridFunction, c: f64) -> Result<GridFunction> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            actual: v.len(),
        });
    }
    let grid = concatenation_grid(w.grid())?;
    let n = w.len();
    let values = w.values()[..n - 1]
        .iter()
        .copied()
        .chain(v.values().iter().map(|x| c * x))
        .collect();
    GridFunction::new(grid, values)
}

fn concatenation_grid(time: &Grid) -> Result<Arc<Grid>> {
    let eta = time.eta();
    let t = time.points();
    let points = t[..t.len() - 1]
        .iter()
        .copied()
        .chain(t.iter().map(|x| x + eta))
        .collect();
    Ok(Arc::new(Grid::new(points)?))
}

/// Quadrature weights on the concatenation grid that match the block weights
/// used by [`fit_joint`]: the `w` part keeps the time-grid weights except at
/// `b`, the `v` part carries the weights of `v_grid`.
pub fn concatenation_weights(time: &Grid, v_grid: &Grid) -> Vec<f64> {
    let n = time.len();
    time.weights()[..n - 1]
        .iter()
        .chain(v_grid.weights())
        .copied()
        .collect()
}

/// Mean squared L2 error of the observed curves reconstructed with `m`
/// components at weight `c`.
pub fn reconstruction_error(data: &JointDataset, c: f64, m: usize) -> Result<f64> {
    let model = fit_joint(data, c)?;
    let mut total = 0.0;
    for (s, scores) in data.samples.iter().zip(&model.scores) {
        let r = model.reconstruct_x(scores, m)?;
        total += r.x.sub(&s.x)?.norm_squared();
    }
    Ok(total / data.len() as f64)
}

pub const DEFAULT_C_RANGE: (f64, f64) = (1e-2, 1e2);
const GOLDEN_TOL: f64 = 1e-4;

/// Minimizes [`reconstruction_error`] over `C` by golden-section search on
/// `log C`. Returns `1` when the objective does not depend on `C`.
pub fn optimize_c(data: &JointDataset, m: usize, range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Parameter(format!(
            "invalid search range [{lo}, {hi}]"
        )));
    }
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: data.len(),
        });
    }
    let mut evaluated: Vec<(f64, f64)> = Vec::new();
    let mut objective = |log_c: f64| -> f64 {
        let c = log_c.exp();
        let value = match reconstruction_error(data, c, m) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                debug!("optimize_c: C = {c}: {e}");
                f64::INFINITY
            }
        };
        evaluated.push((c, value));
        value
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x0, mut x3) = (lo.ln(), hi.ln());
    objective(x0);
    objective(x3);
    let mut x1 = x3 - inv_phi * (x3 - x0);
    let mut x2 = x0 + inv_phi * (x3 - x0);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while x3 - x0 > GOLDEN_TOL {
        if f1 <= f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - inv_phi * (x3 - x0);
            f1 = objective(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + inv_phi * (x3 - x0);
            f2 = objective(x2);
        }
    }
    objective(0.5 * (x0 + x3));

    let finite: Vec<f64> = evaluated
        .iter()
        .map(|e| e.1)
        .filter(|v| v.is_finite())
        .collect();
    if finite.is_empty() {
        return Err(Error::Optimization(
            "objective is non-finite at every candidate C".into(),
        ));
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if finite.len() == evaluated.len() && max - min <= 1e-12 * (1.0 + min.abs()) {
        return Ok(1.0);
    }
    let best = evaluated
        .iter()
        .filter(|e| e.1.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    Ok(best.0)
}

/// `(mean of w_i, Psi^{-1}(mean of v_i))`.
pub fn frechet_mean(data: &JointDataset) -> Result<(GridFunction, WarpingFunction)> {
    let mean_w = pointwise_mean(data.samples.iter().map(|s| &s.w))?;
    let mean_v = pointwise_mean(data.v.iter())?;
    let gamma = data.transform.inverse(&mean_v, data.time_grid())?;
    Ok((mean_w, gamma))
}

/// `integral Var(w) + C^2 integral Var(v)` with divisor `N`.
pub fn frechet_variance(data: &JointDataset, c: f64) -> Result<f64> {
    check_c(c)?;
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: data.len(),
        });
    }
    let var_w = pointwise_variance(data.samples.iter().map(|s| &s.w))?;
    let var_v = pointwise_variance(data.v.iter())?;
    Ok(var_w.integrate() + c * c * var_v.integrate())
}

/// The metric `d` between two observations.
pub fn distance(a: &JointSample, b: &JointSample, transform: &Transform, c: f64) -> Result<f64> {
    check_c(c)?;
    let va = transform.forward(&a.gamma)?;
    let vb = transform.forward(&b.gamma)?;
    distance_z((&a.w, &va), (&b.w, &vb), c)
}

/// `||z1 - z2||_w` for transformed pairs.
pub fn distance_z(
    a: (&GridFunction, &GridFunction),
    b: (&GridFunction, &GridFunction),
    c: f64,
) -> Result<f64> {
    let dw = a.0.sub(b.0)?.norm_squared();
    let dv = a.1.sub(b.1)?.norm_squared();
    Ok((dw + c * c * dv).sqrt())
}

fn pointwise_mean<'a>(fs: impl Iterator<Item = &'a GridFunction>) -> Result<GridFunction> {
    let fs: Vec<&GridFunction> = fs.collect();
    let first = fs[0];
    let mut acc = vec![0.0; first.len()];
    for f in &fs {
        f.ensure_same_grid(first)?;
        acc.iter_mut().zip(f.values()).for_each(|(a, x)| *a += x);
    }
    let n = fs.len() as f64;
    GridFunction::new(
        Arc::clone(first.grid()),
        acc.into_iter().map(|a| a / n).collect(),
    )
}

fn pointwise_variance<'a>(
    fs: impl Iterator<Item = &'a GridFunction> + Clone,
) -> Result<GridFunction> {
    let mean = pointwise_mean(fs.clone())?;
    let mut acc = vec![0.0; mean.len()];
    let mut n = 0usize;
    for f in fs {
        acc.iter_mut()
            .zip(f.values().iter().zip(mean.values()))
            .for_each(|(a, (x, m))| *a += (x - m) * (x - m));
        n += 1;
    }
    GridFunction::new(
        Arc::clone(mean.grid()),
        acc.into_iter().map(|a| a / n as f64).collect(),
    )
}
