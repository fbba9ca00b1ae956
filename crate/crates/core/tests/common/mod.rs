//! Reference computations written independently of the library routines.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qfals::linalg::{ComplexMatrix, C64};

/// Eigenvalues of a Hermitian matrix via its real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is that of `h` with each value doubled.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.rows();
    let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let z = h[(i % n, j % n)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let mut ev: Vec<f64> = real.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(h)[0]
}

pub fn rank(h: &ComplexMatrix, tol: f64) -> usize {
    hermitian_eigenvalues(h).iter().filter(|&&l| l.abs() > tol).count()
}

/// `Σ_k |K_k⟩⟩⟨⟨K_k|` with `|K⟩⟩` indexed by `out·d_in + in`.
pub fn choi_from_kraus(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let (dout, din) = kraus[0].shape();
    let n = dout * din;
    let mut c = ComplexMatrix::zeros(n, n);
    for k in kraus {
        for r in 0..n {
            for s in 0..n {
                c[(r, s)] += k[(r / din, r % din)] * k[(s / din, s % din)].conj();
            }
        }
    }
    c
}

/// Trace over the second factor of `d1 ⊗ d2`, by explicit index sums.
pub fn trace_second(x: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|e| x[(i * d2 + e, j * d2 + e)]).sum())
}

/// Trace over the first factor of `d1 ⊗ d2`.
pub fn trace_first(x: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|a| x[(a * d2 + i, a * d2 + j)]).sum())
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `Σ_i |ii⟩ / √m` on `d_a ⊗ d_b`, `m = min(d_a, d_b)`.
pub fn max_entangled_vector(da: usize, db: usize) -> ComplexMatrix {
    let m = da.min(db);
    let mut v = ComplexMatrix::zeros(da * db, 1);
    for i in 0..m {
        v[(i * db + i, 0)] = c(1.0 / (m as f64).sqrt());
    }
    v
}

pub fn outer(v: &ComplexMatrix) -> ComplexMatrix {
    let n = v.rows();
    ComplexMatrix::from_fn(n, n, |i, j| v[(i, 0)] * v[(j, 0)].conj())
}

pub fn scaled_identity(n: usize, s: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(s) } else { c(0.0) })
}

pub fn max_abs(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hs(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Singlet projector `(I − SWAP)/2` on two qubits.
pub fn singlet() -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(4, 4);
    p[(1, 1)] = c(0.5);
    p[(2, 2)] = c(0.5);
    p[(1, 2)] = c(-0.5);
    p[(2, 1)] = c(-0.5);
    p
}
