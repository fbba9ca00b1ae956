//! Haar twirls on one tensor factor.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{embed_on_factor, haar_unitary, kron, partial_trace, permute_systems, ComplexMatrix};
use crate::parallel::parallel_mean;

fn check(x: &ComplexMatrix, dims: &[usize], factor: usize) -> Result<()> {
    let total: usize = dims.iter().product();
    if !x.is_square() || x.rows() != total {
        return Err(Error::DimensionMismatch(format!("{}x{} operator for dims {dims:?}", x.rows(), x.cols())));
    }
    if factor >= dims.len() {
        return Err(Error::DimensionMismatch(format!("factor {factor} out of range for dims {dims:?}")));
    }
    Ok(())
}

/// `∫ (U⊗I) X (U†⊗I) dU = (I/d_k) ⊗ Tr_k X`, placed back in the original factor order.
pub fn twirl_analytic(x: &ComplexMatrix, dims: &[usize], factor: usize) -> Result<ComplexMatrix> {
    check(x, dims, factor)?;
    let d = dims[factor];
    let rest: Vec<usize> = (0..dims.len()).filter(|&i| i != factor).collect();
    let reduced = partial_trace(x, dims, &rest)?;
    let front = kron(&ComplexMatrix::identity(d).scale_real(1.0 / d as f64), &reduced);
    let mut front_dims = vec![d];
    front_dims.extend(rest.iter().map(|&i| dims[i]));
    let perm: Vec<usize> = (0..dims.len())
        .map(|i| match i.cmp(&factor) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => i + 1,
            std::cmp::Ordering::Greater => i,
        })
        .collect();
    permute_systems(&front, &front_dims, &perm)
}

fn conjugated<R: Rng + ?Sized>(x: &ComplexMatrix, dims: &[usize], factor: usize, rng: &mut R) -> ComplexMatrix {
    let u = haar_unitary(dims[factor], rng);
    embed_on_factor(&u, dims, factor).expect("checked dims").conjugate(x)
}

/// Empirical mean of `(U⊗I) X (U†⊗I)` over `n` Haar draws from `rng`.
pub fn twirl_monte_carlo<R: Rng + ?Sized>(
    x: &ComplexMatrix,
    dims: &[usize],
    factor: usize,
    n: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    check(x, dims, factor)?;
    if n == 0 {
        return Err(Error::InvalidArgument("twirl needs at least one sample".into()));
    }
    let mut acc = ComplexMatrix::zeros(x.rows(), x.cols());
    for _ in 0..n {
        acc = &acc + &conjugated(x, dims, factor, rng);
    }
    Ok(acc.scale_real(1.0 / n as f64))
}

/// Multi-threaded variant; reproducible for fixed `(seed, threads)`.
pub fn twirl_monte_carlo_parallel(
    x: &ComplexMatrix,
    dims: &[usize],
    factor: usize,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<ComplexMatrix> {
    check(x, dims, factor)?;
    if n == 0 {
        return Err(Error::InvalidArgument("twirl needs at least one sample".into()));
    }
    Ok(parallel_mean(n, seed, threads, |rng| conjugated(x, dims, factor, rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, seeded_rng, C64};

    fn bell() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexMatrix::column(&[C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]);
        ComplexMatrix::projector_onto(&v)
    }

    #[test]
    fn bell_twirl_is_maximally_mixed() {
        let t = twirl_analytic(&bell(), &[2, 2], 0).unwrap();
        assert!(t.max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
    }

    #[test]
    fn product_twirl_mixes_only_the_twirled_factor() {
        let mut rng = seeded_rng(1);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let x = kron(&a, &b);
        let t0 = twirl_analytic(&x, &[2, 3], 0).unwrap();
        assert!(t0.max_abs_diff(&kron(&ComplexMatrix::identity(2).scale_real(0.5), &b)) < 1e-14);
        let t1 = twirl_analytic(&x, &[2, 3], 1).unwrap();
        assert!(t1.max_abs_diff(&kron(&a, &ComplexMatrix::identity(3).scale_real(1.0 / 3.0))) < 1e-14);
    }

    #[test]
    fn middle_factor_twirl_matches_monte_carlo() {
        let mut rng = seeded_rng(2);
        let x = random_density(12, &mut rng);
        let exact = twirl_analytic(&x, &[2, 3, 2], 1).unwrap();
        assert!((exact.trace() - x.trace()).norm() < 1e-12);
        let mc = twirl_monte_carlo(&x, &[2, 3, 2], 1, 4000, &mut rng).unwrap();
        assert!(mc.hs_distance(&exact) <= 0.05 * x.frobenius_norm());
    }

    #[test]
    fn single_sample_is_a_conjugation() {
        let mut rng = seeded_rng(3);
        let x = bell();
        let one = twirl_monte_carlo(&x, &[2, 2], 0, 1, &mut rng).unwrap();
        let u = haar_unitary(2, &mut seeded_rng(3));
        let expected = kron(&u, &ComplexMatrix::identity(2)).conjugate(&x);
        assert!(one.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn parallel_is_reproducible() {
        let x = bell();
        let a = twirl_monte_carlo_parallel(&x, &[2, 2], 0, 300, 9, 3).unwrap();
        let b = twirl_monte_carlo_parallel(&x, &[2, 2], 0, 300, 9, 3).unwrap();
        assert_eq!(a, b);
        assert!(twirl_monte_carlo(&x, &[2, 2], 0, 0, &mut seeded_rng(0)).is_err());
        assert!(twirl_analytic(&x, &[2, 3], 0).is_err());
    }
}
