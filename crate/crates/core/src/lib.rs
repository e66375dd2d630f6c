//! Second-order multiresponse surface models optimized over a spherical
//! experimental region, with the sensitivity of the optimum to the fitted
//! coefficients and its asymptotic normal law.
//!
//! The pipeline is:
//!
//! 1. [`model`] builds the quadratic basis `z(x)`, the design matrix and the
//!    multivariate least-squares fit `B̂ = (X'X)⁻¹X'Y` with residual covariance `Σ̂`.
//! 2. [`scalarize`] collapses the `r` fitted surfaces into one quadratic objective
//!    through a weighted sum of the responses.
//! 3. [`solver`] finds the global minimizer of that quadratic over `‖x‖ ≤ c` and
//!    its Lagrange multiplier, with KKT diagnostics.
//! 4. [`sensitivity`] differentiates the KKT system with respect to `vec(B̂)`.
//! 5. [`asymptotics`] propagates `Cov(vec B̂)` through that Jacobian into the
//!    covariance of the optimum and builds confidence intervals and ellipsoids.
//! 6. [`montecarlo`] checks the whole chain against simulated experiments.
//!
//! Everything here is `no_std` + `alloc`. File formats, the command line and the
//! parallel replicate runner live in the `rsm` crate.
//!
//! All `vec(·)` quantities use column stacking: entry `(j, k)` of a `p × r`
//! coefficient matrix sits at position `k·p + j`.

#![no_std]

extern crate alloc;

pub mod asymptotics;
mod error;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod scalarize;
pub mod sensitivity;
pub mod solver;
pub mod special;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
