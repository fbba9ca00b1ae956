//! Tensor products, partial traces and factor permutations.

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Kronecker product: entry `(i·rb + k, j·cb + l)` is `a[i,j]·b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right. Empty list gives `[1]`.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

fn check_square_dims(x: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    let total: usize = dims.iter().product();
    if !x.is_square() || x.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} (product {total}) do not match a {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    Ok(total)
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn compose(digits: &[usize], dims: &[usize], factors: &[usize]) -> usize {
    factors.iter().fold(0, |acc, &f| acc * dims[f] + digits[f])
}

/// Traces out every factor not listed in `keep`. Kept factors appear in
/// ascending order in the result.
pub fn partial_trace(x: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total = check_square_dims(x, dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "kept factor {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let out_dim: usize = kept.iter().map(|&f| dims[f]).product();

    let index_pairs: Vec<(usize, usize)> = (0..total)
        .map(|r| {
            let d = digits(r, dims);
            (compose(&d, dims, &kept), compose(&d, dims, &traced))
        })
        .collect();

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (r, &(kr, tr)) in index_pairs.iter().enumerate() {
        for (c, &(kc, tc)) in index_pairs.iter().enumerate() {
            if tr == tc {
                out[(kr, kc)] += x[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `i` of the result is factor `perm[i]` of `x`.
pub fn permute_systems(x: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total = check_square_dims(x, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::DimensionMismatch(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // new index of each old index
    let map: Vec<usize> = (0..total)
        .map(|r| {
            let d = digits(r, dims);
            perm.iter().fold(0, |acc, &p| acc * dims[p] + d[p])
        })
        .collect();
    debug_assert_eq!(new_dims.iter().product::<usize>(), total);
    let mut out = ComplexMatrix::zeros(total, total);
    for r in 0..total {
        for c in 0..total {
            out[(map[r], map[c])] = x[(r, c)];
        }
    }
    Ok(out)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` acting on factor `factor`.
pub fn embed_on_factor(op: &ComplexMatrix, dims: &[usize], factor: usize) -> Result<ComplexMatrix> {
    if factor >= dims.len() || op.rows() != dims[factor] || op.cols() != dims[factor] {
        return Err(Error::DimensionMismatch(format!(
            "cannot place a {}x{} operator on factor {factor} of {dims:?}",
            op.rows(),
            op.cols()
        )));
    }
    let before: usize = dims[..factor].iter().product();
    let after: usize = dims[factor + 1..].iter().product();
    Ok(kron(&kron(&ComplexMatrix::identity(before), op), &ComplexMatrix::identity(after)))
}
