//! Deterministic data-parallel dispatch.
//!
//! Reductions over dataset points are split into fixed-size chunks; each chunk
//! is reduced sequentially and the per-chunk partials are merged strictly in
//! chunk order. The floating-point reduction tree therefore does not depend on
//! thread count or scheduling, and the `parallel` feature changes throughput
//! only — results are bit-identical to the sequential build.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk width for point reductions. Small enough to load-balance a handful of
/// cores on minibatches, large enough that per-chunk overhead is negligible.
pub(crate) const POINT_CHUNK: usize = 32;

fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n)
        .step_by(POINT_CHUNK)
        .map(|start| start..(start + POINT_CHUNK).min(n))
        .collect()
}

/// Folds `eval` over `0..n` in [`POINT_CHUNK`]-sized chunks, merging partials
/// in ascending chunk order.
pub(crate) fn fold_chunks<T, E, M>(n: usize, zero: T, eval: E, merge: M) -> T
where
    T: Send,
    E: Fn(Range<usize>) -> T + Sync + Send,
    M: Fn(&mut T, T),
{
    let ranges = chunk_ranges(n);

    #[cfg(feature = "parallel")]
    let partials: Vec<T> = ranges.into_par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<T> = ranges.into_iter().map(eval).collect();

    let mut acc = zero;
    for part in partials {
        merge(&mut acc, part);
    }
    acc
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
