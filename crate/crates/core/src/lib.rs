//! Kronecker-structured covariance estimation and polarimetric symmetry
//! classification for multipass PolSAR data.
//!
//! The data model treats each pixel's stacked multipass polarimetric vector
//! as zero-mean complex circular Gaussian with covariance C_t (x) C_p, an
//! unstructured temporal factor times a 3x3 polarimetric factor constrained
//! to one of four scattering-symmetry structures. The crate provides:
//!
//! - [`linalg`]: complex Hermitian primitives (sample covariance, Kronecker
//!   algebra, commutation matrix, Cholesky, small Hermitian eigensolver,
//!   Pauli coherence transform);
//! - [`symmetry`]: closed-form constrained ML estimates of the polarimetric
//!   covariance for each symmetry hypothesis;
//! - [`flipflop`]: alternating ML estimation of both Kronecker factors;
//! - [`mos`]: penalized model-order-selection rules (AIC, GIC, BIC, HQC)
//!   choosing the dominant symmetry, plus the temporal-uncorrelated
//!   baseline classifier;
//! - [`sim`]: seeded Monte Carlo experiments (estimation NRMSE, confusion
//!   matrices, Cohen's kappa);
//! - [`halpha`]: entropy / mean-alpha decomposition and zone indexing;
//! - [`imaging`]: stack file I/O, sliding-window per-pixel classification
//!   and decomposition maps, rendering, region statistics.

pub mod error;
pub mod flipflop;
pub mod halpha;
pub mod imaging;
pub mod linalg;
pub mod mos;
pub mod sim;
pub mod symmetry;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
