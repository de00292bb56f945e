//! Prior-aware transmit waveform design for MIMO radar angle estimation.
//!
//! The crate covers the array model, angle priors and their moments, Bayesian
//! Cramér-Rao bounds, ADMM waveform solvers and Monte-Carlo MAP evaluation.

pub mod admm;
pub mod array;
pub mod bounds;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod solvers;

pub use admm::{dual_update, papr_project, project_feasible, quad_x_update, AdmmConfig, AdmmTrace, IterRecord};
pub use array::{beampattern, steering, steering_derivative, synthesize_received, ArrayConfig, CMatrix, CVector, Waveform};
pub use bounds::{fim_signal, pcrb_theta, pcrb_upper_bound, FimBlocks};
pub use distribution::{compute_moments, DistributionMoments, MomentOptions, TargetDistribution};
pub use error::{Error, Result};
pub use estimation::{map_estimate, monte_carlo_mse, MseReport};
pub use grid::AngularGrid;
pub use solvers::{
    baseline_crb, baseline_omni, solve_pcrb, solve_psbp_fair, solve_psbp_integrated, SolveResult,
};
