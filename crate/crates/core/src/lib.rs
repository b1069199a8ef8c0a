//! Finite-dimensional GKSL generators: validation, canonical form, the
//! induced digraph, and invariant-state spaces computed from graph data and
//! cross-checked against a superoperator null-space oracle.
//!
//! All indices in the Rust API are 0-based. File formats and the CLI use
//! 1-based indices.

pub mod basis;
pub mod cli;
pub mod digraph;
pub mod error;
pub mod expm;
pub mod fixtures;
pub mod generator;
pub mod io;
pub mod kernel;

pub use basis::{BasisKind, BasisOrdering, Block2, BlockRepr, CMatrix, CVector, Label};
pub use digraph::{InducedDigraph, SccDecomposition, StationaryVector};
pub use error::{GkslError, Result};
pub use generator::{GellMannSpec, GeneratorSpec, ValidationReport};
pub use kernel::{EigenPair, KernelBasis, KernelTag};
pub use num_complex::Complex64;

/// Default absolute tolerance, scaled by the largest entry where relevant.
pub const DEFAULT_TOL: f64 = 1e-9;
