//! Covariance filters and covariance networks for signals observed through
//! bounded discretization operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: symmetric eigendecomposition, Cholesky, polynomial filters,
//! * [`discretize`]: discretization operators and their adjoints,
//! * [`covariance`]: empirical covariance matrices and operators,
//! * [`filters`]: spectral/polynomial covariance filters and FPCA,
//! * [`network`]: the covariance network, its gradients and training,
//! * [`datagen`]: Gaussian-process bags, noise injection and UCR ingestion.

pub mod covariance;
pub mod datagen;
pub mod discretize;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod network;

pub use error::{Error, Result};
