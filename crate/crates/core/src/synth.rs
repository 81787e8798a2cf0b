//! Seeded generation of the power-warping toy family `gamma(t) = t^k`.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`), a counter-based stream
//! cipher generator whose output for a given seed is fixed across platforms.
//! Uniforms use the top 53 bits of each 64-bit word, normals use Box–Muller,
//! and Gamma variates use Marsaglia–Tsang.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::joint::JointSample;
use crate::warping::{validate_warping, WarpingFunction};

/// Exponent of the held-out curve in the toy example.
pub const HELD_OUT_K: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub n: usize,
    pub shape: f64,
    pub rate: f64,
    pub grid_size: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            n: 50,
            shape: 5.0,
            rate: 5.0,
            grid_size: 201,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn with_seed(seed: u64) -> Self {
        ToyConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.rate > 0.0) {
            return Err(Error::Parameter(
                "Gamma shape and rate must be positive".into(),
            ));
        }
        if self.n < 1 {
            return Err(Error::Parameter("sample count must be at least 1".into()));
        }
        if self.grid_size < 3 {
            return Err(Error::Parameter("grid size must be at least 3".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::uniform(0.0, 1.0, self.grid_size)?))
    }
}

/// Amplitude part of the joint toy data: `w_i(t) = (1 + a_i) sin(2 pi t)` with
/// `a_i ~ N(0, amplitude_sd^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSpec {
    pub amplitude_sd: f64,
    /// When false all warpings are the identity.
    pub vary_phase: bool,
}

impl Default for AmplitudeSpec {
    fn default() -> Self {
        AmplitudeSpec {
            amplitude_sd: 0.2,
            vary_phase: true,
        }
    }
}

/// Seeded source of uniform, normal and Gamma variates.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Gamma with the given shape and rate (mean `shape / rate`).
    pub fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        if shape < 1.0 {
            let boost = self.uniform().powf(1.0 / shape);
            return self.gamma(shape + 1.0, rate) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = (1.0 + c * x).powi(3);
            if v <= 0.0 {
                continue;
            }
            let u = self.uniform();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v / rate;
            }
        }
    }
}

/// `n` independent Gamma(shape, rate) draws.
pub fn gamma_sample(shape: f64, rate: f64, seed: u64, n: usize) -> Result<Vec<f64>> {
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::Parameter(
            "Gamma shape and rate must be positive".into(),
        ));
    }
    let mut s = Sampler::new(seed, 0);
    Ok((0..n).map(|_| s.gamma(shape, rate)).collect())
}

/// `gamma(t) = a + eta s^k` with `s = (t - a) / eta`, carrying the density
/// `k s^{k-1}`.
///
/// At `t = a` the density is singular or zero for `k != 1`; there it is set to
/// `k (s_1 / e)^{k-1}`, the geometric mean of `k s^{k-1}` over the first cell,
/// which keeps `log` of the density affine in `log s` on the whole grid.
pub fn power_warping(grid: &Arc<Grid>, k: f64) -> Result<WarpingFunction> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Parameter(format!(
            "power exponent must be positive, got {k}"
        )));
    }
    let (a, eta) = (grid.a(), grid.eta());
    let s_min = (grid.points()[1] - a) / eta / E;
    let gamma = GridFunction::from_fn(Arc::clone(grid), |t| a + eta * ((t - a) / eta).powf(k))?;
    let density = GridFunction::from_fn(Arc::clone(grid), |t| {
        k * ((t - a) / eta).max(s_min).powf(k - 1.0)
    })?;
    validate_warping(gamma)?.with_density(density)
}

/// The exponents `k_i ~ Gamma(shape, rate)` of the toy sample.
pub fn toy_exponents(cfg: &ToyConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    gamma_sample(cfg.shape, cfg.rate, cfg.seed, cfg.n)
}

pub fn gen_power_warpings(cfg: &ToyConfig) -> Result<Vec<WarpingFunction>> {
    let grid = cfg.grid()?;
    toy_exponents(cfg)?
        .into_iter()
        .map(|k| power_warping(&grid, k))
        .collect()
}

/// Joint toy samples with sine amplitudes and power warpings on `[0, 1]`.
pub fn gen_toy_joint(cfg: &ToyConfig, spec: &AmplitudeSpec) -> Result<Vec<JointSample>> {
    gen_toy_joint_on(cfg, spec, &cfg.grid()?)
}

/// The amplitude factors `1 + a_i` used by [`gen_toy_joint`].
pub fn toy_amplitudes(cfg: &ToyConfig, spec: &AmplitudeSpec) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(spec.amplitude_sd >= 0.0 && spec.amplitude_sd.is_finite()) {
        return Err(Error::Parameter("amplitude sd must be nonnegative".into()));
    }
    let mut sampler = Sampler::new(cfg.seed, 1);
    Ok((0..cfg.n)
        .map(|_| 1.0 + spec.amplitude_sd * sampler.normal())
        .collect())
}

/// Joint toy samples on an arbitrary grid; `cfg.grid_size` is ignored and the
/// sine and power family are rescaled affinely to the grid's interval.
pub fn gen_toy_joint_on(
    cfg: &ToyConfig,
    spec: &AmplitudeSpec,
    grid: &Arc<Grid>,
) -> Result<Vec<JointSample>> {
    let amplitudes = toy_amplitudes(cfg, spec)?;
    let warpings = if spec.vary_phase {
        toy_exponents(cfg)?
            .into_iter()
            .map(|k| power_warping(grid, k))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![WarpingFunction::identity(Arc::clone(grid)); cfg.n]
    };
    let (a, eta) = (grid.a(), grid.eta());
    warpings
        .into_iter()
        .zip(amplitudes)
        .map(|(gamma, amp)| {
            let w = GridFunction::from_fn(Arc::clone(grid), |t| {
                amp * (2.0 * PI * (t - a) / eta).sin()
            })?;
            JointSample::new(w, gamma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpca::fit_fpca;
    use crate::joint::{fit_joint, JointDataset};
    use crate::transforms::Transform;
    use crate::warping::{derivative, finite_difference};

    #[test]
    fn gamma_moments() {
        let n = 100_000;
        let xs = gamma_sample(5.0, 5.0, 11, n).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(
            (mean - 1.0).abs() < 3.0 * (0.2 / n as f64).sqrt(),
            "mean={mean}"
        );
        assert!((var - 0.2).abs() < 0.02, "var={var}");
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn small_shape_moments() {
        let n = 100_000;
        let xs = gamma_sample(0.5, 2.0, 3, n).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(
            (mean - 0.25).abs() < 3.0 * (0.125 / n as f64).sqrt(),
            "mean={mean}"
        );
    }

    #[test]
    fn deterministic() {
        let a = gamma_sample(5.0, 5.0, 42, 100).unwrap();
        let b = gamma_sample(5.0, 5.0, 42, 100).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, gamma_sample(5.0, 5.0, 43, 100).unwrap());
        assert!(gamma_sample(0.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn power_family() {
        let g = Arc::new(Grid::uniform(0.0, 1.0, 201).unwrap());
        let id = power_warping(&g, 1.0).unwrap();
        assert_eq!(id.values(), WarpingFunction::identity(g.clone()).values());
        let sq = power_warping(&g, 2.0).unwrap();
        assert!((sq.values()[100] - 0.25).abs() < 1e-15);
        assert!(power_warping(&g, 0.0).is_err());
        assert!(power_warping(&g, -1.0).is_err());

        // attached density agrees with finite differences away from t = 0
        let d = derivative(&sq);
        let fd = finite_difference(sq.inner());
        assert!((1..200).all(|j| (d.values()[j] - fd.values()[j]).abs() < 1e-2));
    }

    #[test]
    fn generated_warpings_are_valid() {
        let cfg = ToyConfig {
            n: 30,
            ..ToyConfig::with_seed(5)
        };
        for gamma in gen_power_warpings(&cfg).unwrap() {
            assert!(validate_warping(gamma.inner().clone()).is_ok());
        }
        assert!(ToyConfig { n: 0, ..cfg }.validate().is_err());
        assert!(ToyConfig {
            grid_size: 2,
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn clr_toy_family_is_rank_one() {
        let cfg = ToyConfig {
            n: 20,
            grid_size: 101,
            ..ToyConfig::with_seed(9)
        };
        let v: Vec<_> = gen_power_warpings(&cfg)
            .unwrap()
            .iter()
            .map(|g| Transform::Clr.forward(g).unwrap())
            .collect();
        let model = fit_fpca(&v).unwrap();
        assert!(model.eigenvalues[1] < 1e-12 * model.eigenvalues[0]);
    }

    #[test]
    fn rescaled_interval() {
        let cfg = ToyConfig {
            n: 4,
            ..ToyConfig::with_seed(1)
        };
        let g = Arc::new(Grid::uniform(0.0, 30.0, 61).unwrap());
        let samples = gen_toy_joint_on(&cfg, &AmplitudeSpec::default(), &g).unwrap();
        let ks = toy_exponents(&cfg).unwrap();
        for (s, k) in samples.iter().zip(ks) {
            assert!((s.gamma().values()[30] - 30.0 * 0.5f64.powf(k)).abs() < 1e-12);
            assert!(s.x().first().abs() < 1e-12);
        }
    }

    #[test]
    fn joint_toy_examples() {
        let cfg = ToyConfig {
            n: 12,
            grid_size: 51,
            ..ToyConfig::with_seed(2)
        };
        let flat = gen_toy_joint(
            &cfg,
            &AmplitudeSpec {
                amplitude_sd: 0.0,
                vary_phase: false,
            },
        )
        .unwrap();
        assert!(flat.iter().all(|s| s.x() == flat[0].x()));

        let amp_only = gen_toy_joint(
            &cfg,
            &AmplitudeSpec {
                amplitude_sd: 0.3,
                vary_phase: false,
            },
        )
        .unwrap();
        let model = fit_joint(&JointDataset::new(amp_only, Transform::Clr).unwrap(), 1.0).unwrap();
        assert!(model.phi_v[0].norm() < 1e-10 && model.nus[1] < 1e-12);

        let phase_only = gen_toy_joint(
            &cfg,
            &AmplitudeSpec {
                amplitude_sd: 0.0,
                vary_phase: true,
            },
        )
        .unwrap();
        let d = JointDataset::new(phase_only, Transform::Clr).unwrap();
        let uni = fit_fpca(d.v()).unwrap();
        let model = fit_joint(&d, 2.0).unwrap();
        assert!(model.phi_w[0].norm() < 1e-10);
        assert!((model.nus[0] - 4.0 * uni.eigenvalues[0]).abs() < 1e-10);
    }
}
