//! Approximate solution sets of split multivalued variational inequality
//! problems (SMVIP) and their parametric variant, with metric diagnostics
//! for Levitin-Polyak well-posedness.
//!
//! A problem asks for `(x, y)` with `x ∈ C`, `y ∈ Q`, `y = Ax`, and selections
//! `u ∈ B1(x)`, `v ∈ B2(y)` such that
//!
//! ```text
//! <u, x - x'> + f(x) - f(x') <= 0   for all x' in C
//! <v, y - y'> + g(y) - g(y') <= 0   for all y' in Q
//! ```
//!
//! The crate samples the relaxed sets `S(eps)` and `S_p(delta, eps)` on grids and
//! tracks how their diameter, Kuratowski surrogate and Hausdorff distance
//! behave as the relaxation is driven to zero.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the command-line tool uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnose;
pub mod exprlang;
pub mod metrics;
pub mod model;
pub mod residual;
pub mod scalar;
pub mod scan;
pub mod specfile;

pub use scalar::Scalar;

pub type SplitProblem = model::SplitProblem<f64>;
pub type ConstraintSet = model::ConstraintSet<f64>;
pub type LinearOperator = model::LinearOperator<f64>;
pub type PointCloud = metrics::PointCloud<f64>;
pub type ResidualProfile = residual::ResidualProfile<f64>;
pub type ScanRegion = scan::ScanRegion<f64>;
pub type EpsScan = scan::EpsScan<f64>;
pub type Cluster = scan::Cluster<f64>;
pub type SweepTrend = diagnose::SweepTrend<f64>;
pub type Verdict = diagnose::Verdict<f64>;

/// Numerical floor applied to every membership threshold: `S(0)` is decided at this level.
pub const TAU0: f64 = 1e-9;
