//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the mapping helpers fan out over
//! rayon's global pool; without it they run sequentially. Results are always
//! collected in input order and reduced by ordered folds, so output is
//! bit-identical regardless of thread count or feature selection of the
//! mapping stage.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Sequential mapping, always available; the benchmark suite compares this
/// against [`map_collect`].
pub fn map_collect_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
