//! Parallel/sequential execution dispatch.
//!
//! With the `parallel` feature (default) batch work runs on rayon; without it
//! everything falls back to plain iterators. A process-wide switch lets one
//! binary compare both paths (the criterion benches and the CLI `--threads 1`
//! use it). Work is always partitioned into scheduling-independent items, so
//! results are byte-identical whichever path runs.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable the rayon path at runtime. No-op without the
/// `parallel` feature.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

/// True when the rayon path is compiled in and currently enabled.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Map `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Map `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Apply `f` to mutable row chunks of fixed size. The chunking is independent
/// of the worker count, so numeric results do not depend on scheduling.
pub fn for_each_chunk_mut<'a, A, F>(
    chunks: Vec<ndarray::ArrayViewMut2<'a, A>>,
    offsets: Vec<usize>,
    f: F,
) where
    A: Send,
    F: Fn(usize, &mut ndarray::ArrayViewMut2<'a, A>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        chunks
            .into_iter()
            .zip(offsets)
            .collect::<Vec<_>>()
            .into_par_iter()
            .for_each(|(mut c, off)| f(off, &mut c));
        return;
    }
    for (mut c, off) in chunks.into_iter().zip(offsets) {
        f(off, &mut c);
    }
}
