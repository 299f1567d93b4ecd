//! Execution-mode plumbing: data-parallel map with a sequential fallback.
//!
//! Work items are independent and results are collected in index order, so
//! the two modes produce identical bytes; the `parallel` feature only
//! changes wall-clock time. With the feature disabled, `Parallel` silently
//! degrades to sequential execution.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to evaluate independent work items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    /// Plain in-order loop.
    Sequential,
    /// Rayon work-stealing pool (or sequential when the `parallel`
    /// feature is off).
    #[default]
    Parallel,
}

/// Map `f` over `0..count`, collecting results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..count).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..count).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..count).map(f).collect()
            }
        }
    }
}

/// Cap the global worker pool at `n` threads (0 keeps the default of one
/// per core). Call once, before any parallel work; later calls and calls
/// without the `parallel` feature are no-ops.
pub fn configure_workers(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            // Err only means a pool already exists, which is fine.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}

/// Fallible variant of [`map_indexed`]; the first error wins.
pub fn try_map_indexed<T, E, F>(mode: ExecMode, count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..count).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..count).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..count).map(f).collect()
            }
        }
    }
}
