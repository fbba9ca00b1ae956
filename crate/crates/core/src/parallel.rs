//! Deterministic parallel Monte Carlo reduction.
//!
//! `n` samples are split into contiguous chunks, one per worker. Worker `w`
//! draws from [`worker_rng`]`(seed, w)` and partial sums are reduced in worker
//! order, so results are bit-identical for a fixed `(seed, threads)` pair.

use crate::linalg::{worker_rng, ComplexMatrix, SeededRng};

/// Number of samples handled by each worker.
pub fn chunk_sizes(n: usize, threads: usize) -> Vec<usize> {
    let threads = threads.max(1).min(n.max(1));
    (0..threads).map(|w| n / threads + usize::from(w < n % threads)).collect()
}

/// Empirical mean of `sample` over `n` draws.
pub fn parallel_mean<F>(n: usize, seed: u64, threads: usize, sample: F) -> ComplexMatrix
where
    F: Fn(&mut SeededRng) -> ComplexMatrix + Sync,
{
    assert!(n >= 1, "parallel_mean needs at least one sample");
    let sizes = chunk_sizes(n, threads);
    let partial = |w: usize, count: usize| {
        let mut rng = worker_rng(seed, w as u64);
        let mut acc: Option<ComplexMatrix> = None;
        for _ in 0..count {
            let s = sample(&mut rng);
            acc = Some(match acc {
                Some(a) => &a + &s,
                None => s,
            });
        }
        acc
    };
    let sums: Vec<Option<ComplexMatrix>> = if sizes.len() == 1 {
        vec![partial(0, sizes[0])]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = sizes
                .iter()
                .enumerate()
                .map(|(w, &count)| {
                    let partial = &partial;
                    scope.spawn(move || partial(w, count))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let total = sums.into_iter().flatten().reduce(|a, b| &a + &b).expect("n >= 1");
    total.scale_real(1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    #[test]
    fn chunks_cover_all_samples() {
        assert_eq!(chunk_sizes(10, 3), vec![4, 3, 3]);
        assert_eq!(chunk_sizes(2, 8), vec![1, 1]);
        assert_eq!(chunk_sizes(5, 0), vec![5]);
    }

    #[test]
    fn fixed_threads_reproduce_bit_exactly() {
        let a = parallel_mean(200, 9, 4, |rng| random_density(3, rng));
        let b = parallel_mean(200, 9, 4, |rng| random_density(3, rng));
        assert_eq!(a, b);
    }
}
