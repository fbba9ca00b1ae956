//! Hermitian spectral calculus and subspaces.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Default relative Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Threshold below which a vector component counts as zero when fixing phases.
const PHASE_THRESHOLD: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        self.vectors.col(k)
    }

    /// `Σ f(λ_k) v_k v_k†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition with the default Hermiticity tolerance.
pub fn eig_hermitian(x: &ComplexMatrix) -> Result<HermitianEigen> {
    eig_hermitian_with_tol(x, HERMITIAN_TOL)
}

/// Eigendecomposition of `x`, which must satisfy `‖x − x†‖ ≤ tol·‖x‖`.
///
/// Eigenvalues are sorted descending; each eigenvector's first nonzero
/// component is made real and positive.
pub fn eig_hermitian_with_tol(x: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!("eigendecomposition of a {}x{} matrix", x.rows(), x.cols())));
    }
    let residual = x.hermiticity_residual();
    if residual > tol * x.frobenius_norm() {
        return Err(Error::NotHermitian { residual });
    }
    let n = x.rows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(x.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let v = ComplexMatrix::from_fn(n, 1, |i, _| eig.eigenvectors[(i, src)]);
        let v = v.canonical_phase(PHASE_THRESHOLD);
        for i in 0..n {
            vectors[(i, dst)] = v[(i, 0)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn lambda_min(x: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(x)?.min())
}

/// Positive square root of a PSD matrix. Eigenvalues in `[-tol, 0)` are
/// clamped to zero; anything more negative is an error.
pub fn sqrt_psd(x: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(x)?;
    if eig.min() < -tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.min() });
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// An orthonormal set of column vectors spanning a subspace of `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    pub ambient_dim: usize,
    /// `ambient_dim × k` matrix with orthonormal columns.
    pub basis: ComplexMatrix,
}

impl Subspace {
    /// Wraps `basis`, checking `basis†·basis = I` within 1e-12.
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        let residual = basis.isometry_residual();
        if residual > 1e-12 * (basis.cols().max(1) as f64) {
            return Err(Error::NotIsometry { residual });
        }
        Ok(Self { ambient_dim: basis.rows(), basis })
    }

    /// Orthonormalizes the given columns (Gram–Schmidt, in order).
    pub fn span_of(vectors: &ComplexMatrix) -> Self {
        let basis = gram_schmidt(vectors, 1e-10);
        Self { ambient_dim: vectors.rows(), basis }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: ComplexMatrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: ComplexMatrix::identity(ambient_dim) }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= ambient_dim) {
            return Err(Error::InvalidArgument(format!("basis index {bad} out of range {ambient_dim}")));
        }
        let cols: Vec<ComplexMatrix> = indices.iter().map(|&i| ComplexMatrix::basis_vector(ambient_dim, i)).collect();
        Ok(Self::span_of(&ComplexMatrix::hstack(&cols)?))
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> ComplexMatrix {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// Orthogonal complement, completed against standard basis vectors in index order.
    pub fn complement(&self) -> Self {
        let full = complete_orthonormal(&self.basis, self.ambient_dim);
        Self { ambient_dim: self.ambient_dim, basis: full.columns(self.dim(), self.ambient_dim - self.dim()) }
    }

    /// Norm of the component of column vector `v` orthogonal to the subspace.
    pub fn distance_to(&self, v: &ComplexMatrix) -> f64 {
        let coeffs = self.basis.adjoint().matmul(v);
        (v - &self.basis.matmul(&coeffs)).norm()
    }

    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        (0..other.dim()).all(|k| self.distance_to(&other.basis.col(k)) <= tol)
    }
}

/// Orthonormal basis of the span of eigenvectors with eigenvalue above `tol`.
pub fn support_projector(x: &ComplexMatrix, tol: f64) -> Result<Subspace> {
    let eig = eig_hermitian(x)?;
    if eig.min() < -tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.min() });
    }
    let rank = eig.values.iter().filter(|&&l| l > tol).count();
    Ok(Subspace { ambient_dim: x.rows(), basis: eig.vectors.columns(0, rank) })
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c: C64 = b.iter().zip(v.iter()).map(|(bi, vi)| bi.conj() * vi).sum();
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= c * bi;
        }
    }
}

fn push_if_independent(v: Vec<C64>, basis: &mut Vec<Vec<C64>>, tol: f64) -> bool {
    let mut v = v;
    let start = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if start == 0.0 {
        return false;
    }
    // two passes keep the result orthogonal to working precision
    project_out(&mut v, basis);
    project_out(&mut v, basis);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= tol * start {
        return false;
    }
    v.iter_mut().for_each(|z| *z /= norm);
    basis.push(v);
    true
}

fn columns_of(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)]).collect()).collect()
}

fn from_columns(rows: usize, cols: &[Vec<C64>]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis for the span of the columns of `m`, dropping columns
/// whose residual falls below `tol` relative to their norm.
pub fn gram_schmidt(m: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let mut basis = Vec::new();
    for c in columns_of(m) {
        push_if_independent(c, &mut basis, tol);
    }
    from_columns(m.rows(), &basis)
}

/// Extends orthonormal columns `m` to `target` orthonormal columns by
/// Gram–Schmidt against the standard basis vectors in index order.
pub fn complete_orthonormal(m: &ComplexMatrix, target: usize) -> ComplexMatrix {
    let n = m.rows();
    let mut basis = columns_of(m);
    for k in 0..n {
        if basis.len() >= target {
            break;
        }
        let mut e = vec![ZERO; n];
        e[k] = C64::new(1.0, 0.0);
        push_if_independent(e, &mut basis, 1e-8);
    }
    from_columns(n, &basis)
}
