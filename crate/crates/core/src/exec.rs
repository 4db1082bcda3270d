//! Execution strategy for the data-parallel inner loops.
//!
//! Every bulk operation in this crate (sequence generation, per-sequence
//! preprocessing, per-chunk gradient evaluation, per-tree training, batch
//! prediction) funnels through [`map`]. With the `parallel` feature the work
//! is spread over the rayon pool; without it, or with
//! [`force_sequential`] set, it runs on the calling thread. Results are
//! collected in input order either way, so outputs are bit-identical across
//! modes and worker counts.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path even when compiled with the `parallel` feature.
/// Used by the benchmark suite to compare both modes in one build.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// True when work will run on the calling thread only.
pub fn is_sequential() -> bool {
    cfg!(not(feature = "parallel")) || FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if !is_sequential() {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Order-preserving map over an index range.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if !is_sequential() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}
