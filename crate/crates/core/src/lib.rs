//! Reconstruction of a stationary heat source in the 1D heat equation
//!
//! The forward model is `u_t = a² u_xx + f(x)` on `[0, l]` with zero Dirichlet
//! boundaries and zero initial temperature. Sampling the truncated sine-series
//! solution at a set of `(x, t)` points gives a linear Fredholm equation of the
//! first kind for `f`, which is discretized on interior nodes and solved either
//! naively (to expose the ill-conditioning) or with Tikhonov regularization.
//!
//! Pipeline:
//!
//! - [`model`]: configuration, grids, sampling schemes, measurement containers
//! - [`direct`]: series solver, data generation, noise, Crank–Nicolson oracle
//! - [`kernel`]: Fredholm kernel and its discretized matrix
//! - [`inversion`]: naive and Tikhonov solves, residuals, functional values
//! - [`rules`]: parameter-choice ladders (oracle distance, discrepancy)

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod direct;
pub mod error;
pub mod inversion;
pub mod kernel;
pub mod model;
pub mod quadrature;
pub mod rules;

pub use error::{Error, Result};
