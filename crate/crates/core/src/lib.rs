//! Adaptive finite element computation of Dirichlet-Laplacian eigenvalue
//! clusters on polygonal (possibly slit) domains, driven by a pointwise
//! residual estimator.
//!
//! The pipeline is the usual Solve / Estimate / Mark / Refine loop:
//!
//! * [`geometry`] describes domains and builds criss-cross initial meshes,
//! * [`mesh`] holds the conforming triangulation and bisection refinement,
//! * [`fem`] assembles P1/P2 stiffness and mass operators,
//! * [`sparse`] provides the sparse symmetric storage and a Cholesky factorization,
//! * [`eigen`] computes the lowest eigenpairs with shift-invert Lanczos,
//! * [`estimator`] evaluates the L∞ and energy residual estimators,
//! * [`marking`] selects elements,
//! * [`adapt`] drives the loop and records the history,
//! * [`verify`] holds analytic oracles on the unit square,
//! * [`cli`] expands experiment presets into artifacts.

// element and dense kernels read more clearly with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod adapt;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod geometry;
pub mod marking;
pub mod mesh;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
