//! Functions sampled on a shared grid over `T = [a, b]`.
//!
//! All integrals use the composite trapezoidal rule on the stored grid, so
//! `integrate`, `inner_product` and `cumulative_integral` agree with each other
//! exactly (the cumulative integral ends at the value of `integrate`).
//! Operations that combine two functions require identical grids; use
//! [`GridFunction::resample`] to move a function to another grid explicitly.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Minimum number of grid points.
pub const MIN_GRID_LEN: usize = 3;

/// A strictly increasing set of evaluation points covering `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < MIN_GRID_LEN {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_GRID_LEN} points, got {}",
                points.len()
            )));
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(j) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing (index {})",
                j + 1
            )));
        }
        let weights = trapezoid_weights(&points);
        Ok(Grid { points, weights })
    }

    /// `n` equally spaced points from `a` to `b`, both endpoints included exactly.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!(
                "need finite a < b, got [{a}, {b}]"
            )));
        }
        if n < MIN_GRID_LEN {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_GRID_LEN} points, got {n}"
            )));
        }
        let step = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
        points[n - 1] = b;
        Grid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoidal quadrature weights; they sum to `eta`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn a(&self) -> f64 {
        self.points[0]
    }

    pub fn b(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Interval length `b - a`.
    pub fn eta(&self) -> f64 {
        self.b() - self.a()
    }

    /// Largest spacing between consecutive points.
    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    let mut weights = vec![0.0; n];
    for j in 0..n - 1 {
        let half = 0.5 * (points[j + 1] - points[j]);
        weights[j] += half;
        weights[j + 1] += half;
    }
    weights
}

/// A real function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        GridFunction::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.len();
        GridFunction::new(grid, vec![c; n])
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Trapezoidal approximation of the integral over `[a, b]`.
    pub fn integrate(&self) -> f64 {
        dot(self.grid.weights(), &self.values)
    }

    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((x, y), w)| w * x * y)
            .sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(x, w)| w * x * x)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Running trapezoidal integral, zero at `a`.
    pub fn cumulative_integral(&self) -> GridFunction {
        let values = cumulative_trapezoid(self.grid.points(), &self.values);
        GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    /// Applies `f` pointwise. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(
            Arc::clone(&self.grid),
            self.values.iter().map(|&x| f(x)).collect(),
        )
    }

    pub fn zip_map(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        GridFunction::new(
            Arc::clone(&self.grid),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        )
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |x, y| x - y)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |x, y| x + c * y)
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Linear interpolation at `t`; constant extrapolation outside `[a, b]`.
    pub fn eval(&self, t: f64) -> f64 {
        interp_linear(self.grid.points(), &self.values, t)
    }

    /// Linear interpolation onto another grid.
    pub fn resample(&self, grid: Arc<Grid>) -> GridFunction {
        let values = grid.points().iter().map(|&t| self.eval(t)).collect();
        GridFunction { grid, values }
    }
}

pub(crate) fn same_grid(g: &Arc<Grid>, h: &Arc<Grid>) -> bool {
    Arc::ptr_eq(g, h) || g.points() == h.points()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn cumulative_trapezoid(points: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for j in 1..values.len() {
        acc += 0.5 * (points[j] - points[j - 1]) * (values[j] + values[j - 1]);
        out.push(acc);
    }
    out
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`.
///
/// `xs` must be non-decreasing. Values outside the range are clamped to the
/// end values. Ties in `xs` resolve to the right-most matching node.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[i] > x; 1 <= i <= n - 1
    let i = xs.partition_point(|&p| p <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
