//! Functional PCA of amplitude and phase variability with warping transforms.

pub mod error;
pub mod fpca;
pub mod grid;
pub mod joint;
pub mod synth;
pub mod transforms;
pub mod warping;

pub use error::{Error, Result};
pub use fpca::{fit_fpca, fit_fpca_weighted, select_m, FpcaModel};
pub use grid::{Grid, GridFunction};
pub use joint::{
    concatenate_g, fit_joint, frechet_mean, frechet_variance, optimize_c, JointDataset,
    JointPcaModel, JointSample,
};
pub use synth::{
    gen_power_warpings, gen_toy_joint, gen_toy_joint_on, power_warping, AmplitudeSpec, ToyConfig,
};
pub use transforms::Transform;
pub use warping::{
    derivative, inverse_derivative, validate_warping, DensityFunction, WarpingFunction,
};
