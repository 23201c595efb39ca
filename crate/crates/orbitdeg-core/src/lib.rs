//! Numerical algebraic geometry engine for computing degrees of group-orbit
//! closures of hypersurfaces.
//!
//! The pipeline: build the polynomial systems describing translates of a
//! hypersurface through point conditions or linear slices, solve by monodromy
//! over a parameterized family (with a total-degree homotopy as a small-scale
//! oracle), certify the numerical solutions as approximate zeros via alpha
//! theory, and validate completeness of the solution set with a trace test.

pub mod alpha;
pub mod error;
pub mod homotopy;
pub mod linalg;
pub mod monodromy;
pub mod orbit;
pub mod pipeline;
pub mod polysys;
pub mod scalar;
pub mod solver;
pub mod systems;
pub mod tracetest;
pub mod univariate;

pub use error::{Error, Result};
pub use scalar::{BigC, C64};
