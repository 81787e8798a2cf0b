//! Functional PCA on a common grid.
//!
//! The covariance operator is discretized with the quadrature weights `W` of
//! the grid: the symmetric matrix `W^{1/2} K W^{1/2}` is diagonalized and its
//! eigenvectors are scaled back by `W^{-1/2}`, giving eigenfunctions that are
//! orthonormal under the quadrature inner product. The covariance uses divisor
//! `N`, so the eigenvalues sum to the integrated pointwise variance exactly.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{dot, GridFunction};

/// Raw eigendecomposition shared by univariate and joint PCA.
#[derive(Debug, Clone)]
pub(crate) struct WeightedPca {
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Orthonormal under the weights.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `scores[i][m]`.
    pub scores: Vec<Vec<f64>>,
}

/// PCA of the rows of `data` under the inner product `sum_p w_p x_p y_p`.
pub(crate) fn weighted_pca(data: &[Vec<f64>], weights: &[f64]) -> Result<WeightedPca> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let p = weights.len();
    if let Some(bad) = data.iter().find(|row| row.len() != p) {
        return Err(Error::LengthMismatch {
            expected: p,
            actual: bad.len(),
        });
    }
    if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::Parameter(
            "quadrature weights must be positive".into(),
        ));
    }

    let mut mean = vec![0.0; p];
    for row in data {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, p, |i, j| (data[i][j] - mean[j]) * sqrt_w[j]);
    let cov = scaled.transpose() * &scaled / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    // centering identical rows leaves residues of order eps * |x|, so variances
    // below eps^2 times the raw second moment are indistinguishable from zero
    let raw: f64 = data
        .iter()
        .flat_map(|row| row.iter().zip(weights).map(|(x, w)| w * x * x))
        .sum::<f64>()
        / n as f64;
    let floor = (64.0 * f64::EPSILON).powi(2) * raw;

    let total_weight: f64 = weights.iter().sum();
    let tie = 1e-8 * total_weight.sqrt();
    let mut eigenvalues = Vec::with_capacity(p);
    let mut eigenvectors = Vec::with_capacity(p);
    for &k in &order {
        let mut phi: Vec<f64> = (0..p)
            .map(|j| eig.eigenvectors[(j, k)] / sqrt_w[j])
            .collect();
        let integral = dot(weights, &phi);
        let flip = if integral.abs() > tie {
            integral < 0.0
        } else {
            phi[p - 1] < 0.0
        };
        if flip {
            phi.iter_mut().for_each(|x| *x = -*x);
        }
        let lambda = eig.eigenvalues[k];
        eigenvalues.push(if lambda > floor { lambda } else { 0.0 });
        eigenvectors.push(phi);
    }

    let scores = data
        .iter()
        .map(|row| {
            eigenvectors
                .iter()
                .map(|phi| {
                    (0..p)
                        .map(|j| weights[j] * (row[j] - mean[j]) * phi[j])
                        .sum()
                })
                .collect()
        })
        .collect();

    Ok(WeightedPca {
        mean,
        eigenvalues,
        eigenvectors,
        scores,
    })
}

/// Smallest `M` whose leading eigenvalues explain strictly more than `tau` of
/// the total, where the total is the sum of all computed eigenvalues.
pub fn select_m(eigenvalues: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    if eigenvalues.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Parameter(
            "eigenvalues must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("all eigenvalues are zero".into()));
    }
    let mut cumulative = 0.0;
    for (m, v) in eigenvalues.iter().enumerate() {
        cumulative += v;
        if cumulative / total > tau {
            return Ok(m + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// A fitted univariate functional PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    pub mean: GridFunction,
    pub eigenfunctions: Vec<GridFunction>,
    pub eigenvalues: Vec<f64>,
    /// `scores[i][m]`: score of training sample `i` on component `m`.
    pub scores: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Fits FPCA with the trapezoid weights of the samples' common grid.
pub fn fit_fpca(samples: &[GridFunction]) -> Result<FpcaModel> {
    let first = samples.first().ok_or(Error::InsufficientData {
        required: 2,
        actual: 0,
    })?;
    fit_fpca_weighted(samples, first.grid().weights())
}

/// Fits FPCA with explicit quadrature weights (one per grid point).
pub fn fit_fpca_weighted(samples: &[GridFunction], weights: &[f64]) -> Result<FpcaModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: samples.len(),
        });
    }
    let grid = Arc::clone(samples[0].grid());
    for s in &samples[1..] {
        s.ensure_same_grid(&samples[0])?;
    }
    if weights.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: weights.len(),
        });
    }
    let data: Vec<Vec<f64>> = samples.iter().map(|s| s.values().to_vec()).collect();
    let pca = weighted_pca(&data, weights)?;
    let to_fn = |v: Vec<f64>| GridFunction::new(Arc::clone(&grid), v);
    Ok(FpcaModel {
        mean: to_fn(pca.mean)?,
        eigenfunctions: pca
            .eigenvectors
            .into_iter()
            .map(to_fn)
            .collect::<Result<_>>()?,
        eigenvalues: pca.eigenvalues,
        scores: pca.scores,
        weights: weights.to_vec(),
    })
}

impl FpcaModel {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Fraction of the total variance explained by each component.
    pub fn explained_ratios(&self) -> Vec<f64> {
        let total = self.total_variance();
        self.eigenvalues
            .iter()
            .map(|v| if total > 0.0 { v / total } else { 0.0 })
            .collect()
    }

    /// Scores `<x - mean, phi_m>` of a new function on every component.
    pub fn project_scores(&self, x: &GridFunction) -> Result<Vec<f64>> {
        x.ensure_same_grid(&self.mean)?;
        let centered: Vec<f64> = x
            .values()
            .iter()
            .zip(self.mean.values())
            .map(|(a, b)| a - b)
            .collect();
        Ok(self
            .eigenfunctions
            .iter()
            .map(|phi| {
                centered
                    .iter()
                    .zip(phi.values())
                    .zip(&self.weights)
                    .map(|((c, f), w)| w * c * f)
                    .sum()
            })
            .collect())
    }

    /// `mean + sum_{m < M} scores[m] * phi_m`.
    pub fn reconstruct(&self, scores: &[f64], m: usize) -> Result<GridFunction> {
        let available = self.n_components().min(scores.len());
        if m > available {
            return Err(Error::Truncation {
                requested: m,
                available,
            });
        }
        let mut out = self.mean.clone();
        for (phi, s) in self.eigenfunctions.iter().zip(scores).take(m) {
            out = out.axpy(*s, phi)?;
        }
        Ok(out)
    }
}
