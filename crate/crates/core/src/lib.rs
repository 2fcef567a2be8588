//! Numerical laboratory for the inertial system
//!
//! ```text
//! ẍ(t) + (α/t^q) ẋ(t) + ∇g(x(t) + (γ + β/t^q) ẋ(t)) + ε(t) x(t) = 0
//! ```
//!
//! with a vanishing Tikhonov term `ε(t)x(t)`: objective corpus, vector field
//! and regime classification, adaptive integrator, energy diagnostics and
//! decay fits, the explicit inertial gradient algorithm obtained by
//! discretization, and the experiment runner behind the `tikflow` CLI.

pub mod diagnostics;
pub mod discrete;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod problems;

pub use error::{Error, Result};
