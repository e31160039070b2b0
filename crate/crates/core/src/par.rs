//! Parallel reductions whose result does not depend on the thread count.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// `sum_{i < len} f(i)`, summed in fixed chunks and then in chunk order.
pub(crate) fn ordered_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    ordered_sum2(len, |i| (f(i), 0.0)).0
}

/// Two sums in one pass, as [`ordered_sum`].
pub(crate) fn ordered_sum2<F>(len: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> (f64, f64) + Sync,
{
    let partial: Vec<(f64, f64)> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(len))
                .map(&f)
                .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
        })
        .collect();
    partial
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}
