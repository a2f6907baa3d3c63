//! Execution-mode facade over rayon.
//!
//! Group sampling, distance-matrix fill and envelope queries are data-parallel;
//! everything they produce is collected in index order, so the execution mode
//! never changes results, only wall-clock time. With the `parallel` feature
//! disabled (or [`ExecMode::Sequential`]) the same closures run on one thread.

use serde::{Deserialize, Serialize};

/// How data-parallel stages run. `Parallel` uses the rayon global pool when the
/// `parallel` feature is compiled in and falls back to sequential otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `0..len`, returning results in index order.
pub fn map_indexed<U, F>(mode: ExecMode, len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == ExecMode::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Runs `f` inside a rayon pool with `workers` threads when given; with `None`
/// (or without the `parallel` feature) it runs `f` as-is.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = workers {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("rayon pool");
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}
