//! Complex matrix primitives shared by all modules. All operations are pure
//! functions on immutable inputs.

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::Cholesky;
pub use eigen::{eigen_decompose, eigenvalues};
pub use matrix::{
    block, commutation_matrix, kronecker, pauli_basis, pauli_coherence, ComplexMatrix,
    HermitianMatrix, MultipassSample, CHANNELS,
};
