//! Total least squares with exact condition numbers and cheap bounds.
//!
//! The TLS problem `min ||[E, f]||_F s.t. b + f in range(A + E)` is solved
//! through the SVD of the augmented matrix `[A, b]`. On top of the solver
//! this crate provides:
//!
//! - the exact absolute/relative condition number of the solution map by
//!   three independent routes ([`conditioning`]),
//! - a ladder of lower and upper bounds needing only a few extremal
//!   singular values ([`bounds`]),
//! - seeded generators for the standard families of test problems
//!   ([`generators`]),
//! - finite-difference verification of the Jacobian and the first-order
//!   expansion ([`oracle`]),
//! - batch analysis with deterministic CSV/JSON records ([`report`]).

pub mod bounds;
pub mod conditioning;
pub mod error;
pub mod generators;
pub mod kernel;
pub mod oracle;
pub mod report;
pub mod tls;

pub use error::{Error, Result};
pub use kernel::{solve_square, spectral_norm, thin_svd, ThinSvd};
pub use tls::{
    check_genericity, solve_from_spectral, solve_tls, solve_tls_normal_equations, spectral_data,
    SpectralData, TlsProblem, TlsSolution, DEFAULT_TOL_GAP,
};

pub use nalgebra::{DMatrix, DVector};
