//! Mittag-Leffler functions and the fractional stochastic heat equation.

pub mod fourier;
pub mod mittag_leffler;
pub mod solver;

pub use fourier::{FourierProfile, ProfileTable};
pub use mittag_leffler::{mittag_leffler, rgamma, MittagLefflerParams, Regime};
pub use solver::{
    deterministic_term, greens_kernel, solve, HeatConfig, HeatKernel, HeatSolver, PointStats, SolutionStats,
};
