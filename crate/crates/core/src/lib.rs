//! Numerical companion for first-eigenvalue upper bounds of the drift
//! Laplacian `L = Δ - ∇φ·∇` on weighted warped-product models.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: closed-form warp/weight expressions with exact second-order AD.
//! - [`model`]: warped models `dt² + a(t)² g_N` with weight `φ(t)`, their
//!   Bakry-Émery curvature and hypothesis certificates.
//! - [`bounds`]: closed-form eigenvalue and gradient bounds.
//! - [`sturm`]: the radial operator as a symmetric tridiagonal eigenproblem.
//! - [`liyau`]: numerical checks of the gradient-estimate machinery.
//! - [`soliton`]: audits on flat gradient Ricci solitons.
//! - [`sweep`]: seeded random model families.
//! - [`config`] and [`report`]: run configuration, orchestration and output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod expr;
pub mod liyau;
pub mod model;
pub mod report;
pub mod soliton;
pub mod sturm;
pub mod sweep;

pub use error::{Error, Result};
