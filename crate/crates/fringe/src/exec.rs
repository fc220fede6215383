//! Indexed map helpers used by the hot loops.
//!
//! Every parallel site in this crate is an order-preserving map over an
//! index range, with any randomness derived from the index, never from a
//! shared stream. Reductions over the results stay sequential. That keeps
//! output byte-identical whether the `parallel` feature is on or off and
//! regardless of thread count.

/// Map `f` over `0..n`, preserving order. Uses the rayon pool when the
/// `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Set the global worker-thread count; `0` keeps the runtime default.
/// Only the first effective call wins, matching the pool's semantics.
/// Results never depend on the thread count, only wall time does.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) {
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) {}

/// Always-sequential variant, kept for benchmarking against the pool.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
