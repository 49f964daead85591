//! Numerical toolkit for the Dirichlet Heisenberg Laplacian on cylinders
//! `Ω = ω × (a, b)`.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`geometry`]: cross-section polygon, exact boundary-distance field,
//!    in-radius, boundary-layer areas and the functional `l(ω)`.
//! 2. [`hardy`]: variational estimate of the cross-section Hardy constant.
//! 3. [`operator`] / [`magnetic`]: sparse assembly of the Heisenberg form
//!    `∫ |X₁u|² + |X₂u|²` and of the gauge-phase Landau Hamiltonian.
//! 4. [`eigensolve`]: block preconditioned eigensolver plus a dense Jacobi
//!    oracle.
//! 5. [`bounds`]: Riesz means, the Berezin-type bound and its improved
//!    remainder variants, and eigenfunction-level Hardy checks.
//!
//! [`cli`] wires the stages to a config-driven command line tool.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod eigensolve;
mod error;
pub mod format;
pub mod geometry;
pub mod hardy;
pub mod magnetic;
pub mod operator;
pub mod sparse;

pub use error::{Error, Result};
