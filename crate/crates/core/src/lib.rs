//! Multiparameter Lévy white noise calculus.
//!
//! The crate covers four layers:
//!
//! * [`levy_measure`] and [`sheet_sim`]: finite-activity Lévy measures and the
//!   pure-jump Lévy sheets / Brownian sheets they drive, with box increments,
//!   jump counts and compensated integrals evaluated exactly on each path.
//! * [`basis`] and [`chaos`]: Hermite functions, the tensor basis of
//!   `L²(ℝⁿ)`, polynomials orthonormal in `L²(ν)`, the chaos basis `K_α`,
//!   iterated compensated integrals and the Hida norms.
//! * [`whitenoise`]: truncated chaos expansions of the sheet, its white noise
//!   and the white noise of the compensated Poisson random measure.
//! * [`fracheat`]: Mittag-Leffler functions and a Monte-Carlo solver for the
//!   time-fractional stochastic heat equation driven by Brownian and Lévy
//!   space-time noise.
//!
//! [`cli`] wires everything to a config-file driven command line tool.

pub mod basis;
pub mod chaos;
pub mod cli;
pub mod error;
pub mod fracheat;
pub mod levy_measure;
pub mod mc;
pub mod quadrature;
pub mod rng;
pub mod sheet_sim;
pub mod whitenoise;

pub use error::{Error, Result};
