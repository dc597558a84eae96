//! Schedule-independent parallel reductions.
//!
//! Partial sums are taken over fixed-size chunks and combined in chunk order,
//! so the result is bit-identical for any rayon thread count.

use rayon::prelude::*;

/// Chunk length used by every reduction in the crate.
pub const CHUNK: usize = 4096;

/// Sum `f(i)` for `i in 0..len`.
pub fn sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_chunks(len, |range| range.map(&f).sum())
}

/// Sum over fixed chunks, each chunk reduced by `f` sequentially.
pub fn sum_chunks<F>(len: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(len)))
        .collect();
    partials.into_iter().sum()
}

/// Several sums at once; `f` accumulates into a zeroed slice of length `width`.
pub fn sum_vec<F>(len: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; width];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// [`sum_vec`] with per-chunk scratch state built by `init`.
pub fn sum_vec_with<S, I, F>(len: usize, width: usize, init: I, f: F) -> Vec<f64>
where
    I: Fn() -> S + Sync,
    F: Fn(usize, &mut [f64], &mut S) + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            let mut scratch = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                f(i, &mut acc, &mut scratch);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; width];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Maximum of `f(i)`; NaN values are ignored.
pub fn max(len: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    (0..len)
        .into_par_iter()
        .map(f)
        .filter(|v| !v.is_nan())
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Count of indices satisfying `pred`.
pub fn count(len: usize, pred: impl Fn(usize) -> bool + Sync + Send) -> usize {
    (0..len).into_par_iter().filter(|&i| pred(i)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_independent_of_pool_size() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| sum(100_003, f));
        let b = four.install(|| sum(100_003, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn vector_sums_match_scalar() {
        let v = sum_vec(10_000, 2, |i, acc| {
            acc[0] += i as f64;
            acc[1] += 1.0;
        });
        assert_eq!(v, vec![49_995_000.0, 10_000.0]);
    }
}
