//! Smoothed spectral measures of self-adjoint operators and pencils.
//!
//! The measure `μ_f` of a self-adjoint `L` with respect to a vector `f` is
//! approximated by `K_ε * μ_f` for a high-order rational kernel `K`. Each
//! value needs one shifted solve per kernel pole, done in a spectral basis
//! whose truncation is doubled until the result settles.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod expr;
pub mod fourier;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod realline;
pub mod rep;

pub use engine::{
    adaptive_solve, evaluate_grid, evaluate_measure, evaluate_measure_pencil, MeasureQuery,
    MeasureResult, ResolventModel, SolverOptions, Warning,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use kernel::RationalKernel;
pub use rep::{Basis, FunctionRep};
