//! Numerical laboratory for the singular Dirichlet problem driven by the
//! fractional p-Laplacian, with a singular source `f(x)/u^gamma`.
//!
//! The crate discretizes bounded domains on uniform tensor grids with an
//! explicit exterior collar ([`geometry`]), assembles the discrete Gagliardo
//! pair weights and operator ([`kernel`]), solves the regularized problems by
//! convex minimization inside a damped fixed-point loop driven over a
//! truncation schedule ([`solver`]), and turns the structural properties of
//! the continuum problem (monotonicity, a-priori bounds, comparison,
//! uniqueness, symmetry, boundary datum) into executable checks
//! ([`analysis`]). The [`cli`] module wires everything to a config-driven
//! command line front end.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod solver;

pub use error::{Error, Result};
pub use field::Field;
pub use geometry::{
    build_ball, build_interval, build_rectangle, CompactSubset, GridDomain, Hyperplane,
};
pub use kernel::KernelWeights;
