//! Batch-parallel dispatch.
//!
//! Every per-matrix kernel in this crate is self-contained, so the batch can
//! be split across rayon workers without changing any result bit.

use rayon::prelude::*;

/// Below this many matrix entries in flight the rayon hand-off costs more
/// than the arithmetic it spreads.
const PARALLEL_MIN_ENTRIES: usize = 4096;

pub(crate) fn worth_parallel(batch: usize, dim: usize) -> bool {
    batch > 1 && batch * dim * dim >= PARALLEL_MIN_ENTRIES && rayon::current_num_threads() > 1
}

/// Applies `f(k, item)` to every item, in parallel when `parallel` is set.
pub(crate) fn for_each<I, F>(items: Vec<I>, parallel: bool, f: F)
where
    I: Send,
    F: Fn(usize, I) + Sync + Send,
{
    if parallel {
        items
            .into_par_iter()
            .enumerate()
            .for_each(|(k, item)| f(k, item));
    } else {
        items.into_iter().enumerate().for_each(|(k, item)| f(k, item));
    }
}

/// Maps `f` over `0..batch`, preserving order.
pub(crate) fn map<R, F>(batch: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if parallel {
        (0..batch).into_par_iter().map(f).collect()
    } else {
        (0..batch).map(f).collect()
    }
}
