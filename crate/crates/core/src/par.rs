//! Data-parallel helpers with a sequential fallback.
//!
//! All reductions here use fixed chunk boundaries and combine the per-chunk
//! partial results in index order, so results are bit-identical whether the
//! work ran on one thread or many.

use serde::{Deserialize, Serialize};

/// Runtime choice of execution strategy. Without the `parallel` feature,
/// `Parallel` behaves exactly like `Sequential`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel; output order is always index order.
pub fn map_collect<T, F>(n: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Maps `f` over consecutive chunks `[lo, hi)` of `range`, each of length `chunk`
/// (the last may be shorter). Chunk boundaries depend only on the arguments.
pub fn map_chunks<T, F>(range: std::ops::Range<usize>, chunk: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let len = range.end.saturating_sub(range.start);
    let count = len.div_ceil(chunk);
    map_collect(count, par, |c| {
        let lo = range.start + c * chunk;
        let hi = (lo + chunk).min(range.end);
        f(lo, hi)
    })
}
