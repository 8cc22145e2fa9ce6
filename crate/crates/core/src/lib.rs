//! Dominant-eigenvalue approximation of R0 for epidemic models with two
//! continuous structuring variables, by bivariate Chebyshev collocation.
//!
//! The pipeline is: pick a [`ModelSpec`], assemble the pencil with
//! [`assembly::assemble`], and solve it with [`eigen::dominant_pair`].
//! [`harness::solve`] does both.
//!
//! ```
//! let (spec, reference) = bicolloc_core::builtin("ex1").unwrap();
//! let res = bicolloc_core::harness::solve(&spec, 10, 10, 1e-13).unwrap();
//! assert!((res.r0 - reference.r0_exact.unwrap()).abs() < 1e-10);
//! ```

pub mod age_immunity;
pub mod assembly;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod grid2d;
pub mod harness;
pub mod model;
pub mod quad;
pub mod spectral1d;

pub use assembly::{assemble, DiscretePencil};
pub use eigen::{dominant_pair, R0Result};
pub use error::{Error, Result};
pub use grid2d::{GridFunction, TensorGrid};
pub use harness::{run_convergence, ConvergenceReport};
pub use model::{builtin, validate, ExactReference, ModelSpec};
pub use spectral1d::Grid1D;
