//! Numerical laboratory for Einstein AH structures on compact surfaces.
//!
//! The crate provides:
//! - discrete charts and flat-chart calculus ([`grid`]),
//! - conformal metrics and their curvature operators ([`metric`]),
//! - real parts of holomorphic k-differentials with residual checks
//!   ([`differential`]),
//! - the semilinear conformal-factor operator and its solvers ([`solver`]),
//! - AH structures with Einstein/vortex residual suites ([`structure`]),
//! - the closed-form Einstein–Weyl families on sphere and torus, magnetic
//!   geodesics, and Ricci-flow checks ([`family`]),
//! - cone/Hessian metrics over exact negative-curvature bases ([`cone`]),
//! - machine-readable run reports ([`report`]).

pub mod grid;
pub mod differential;
pub mod metric;
pub mod solver;
pub mod structure;
pub mod family;
pub mod cone;
pub mod report;
