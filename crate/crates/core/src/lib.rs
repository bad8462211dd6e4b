//! Membership testing for tail dependence matrices (TDMs) and Bernoulli
//! compatible matrices (BCMs).
//!
//! A d×d matrix `T` is a TDM iff `T/d` is a BCM, and a BCM is a point of the
//! convex hull of the rank-one matrices `vv^T`, `v ∈ {0,1}^d`. Membership
//! reduces to feasibility of `C_d x = p_d, x ≥ 0`, which the modules here
//! decide by full enumeration, column generation, symmetry reduction or closed
//! forms for structured families.

pub mod cli;
pub mod colgen;
pub mod exact;
pub mod lp;
pub mod matrix;
pub mod maxcut;
pub mod parametric;
pub mod report;
pub mod stochastic;
pub mod symmetry;
mod tolerance;

pub use tolerance::{set_tolerance, tolerance, DEFAULT_TOLERANCE};
