//! Dense complex linear algebra substrate.

mod eig;
mod matrix;
mod random;
mod tensor;

pub use eig::{
    complete_orthonormal, eig_hermitian, eig_hermitian_with_tol, gram_schmidt, lambda_min, sqrt_psd,
    support_projector, HermitianEigen, Subspace, HERMITIAN_TOL,
};
pub use matrix::{sum_matrices, ComplexMatrix, C64, I, ONE, ZERO};
pub use random::{
    complex_gaussian, ginibre, haar_unitary, random_density, random_hermitian, random_isometry, random_pure,
    seeded_rng, worker_rng, SeededRng,
};
pub use tensor::{embed_on_factor, kron, kron_all, partial_trace, permute_systems};
