//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`Exec`]. With the
//! `parallel` feature disabled, [`Exec::Parallel`] silently degrades to the
//! sequential path, so callers never need their own `cfg` switches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Maps `f` over `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Maps and reduces. The parallel path splits `0..len` into one
    /// contiguous chunk per pool thread, folds each chunk in index order and
    /// then folds the chunk results in chunk order. The association order
    /// therefore depends only on the worker count, not on scheduling.
    pub fn map_reduce<T, F, I, R>(self, len: usize, f: F, identity: I, op: R) -> T
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
        I: Fn() -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let chunks = rayon::current_num_threads().clamp(1, len.max(1));
            let bounds = |c: usize| c * len / chunks..(c + 1) * len / chunks;
            return (0..chunks)
                .into_par_iter()
                .map(|c| bounds(c).map(&f).fold(identity(), &op))
                .collect::<Vec<_>>()
                .into_iter()
                .fold(identity(), &op);
        }
        (0..len).map(f).fold(identity(), op)
    }
}
