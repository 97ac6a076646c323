//! Data-parallel execution helpers with a sequential fallback.
//!
//! The heavy loops in this crate (per-wavenumber solves, per-height
//! convolutions, batched property checks) are embarrassingly parallel over an
//! index range. With the `parallel` feature enabled they run on rayon; without
//! it they run sequentially with identical results. Results are always
//! collected *by index* and reductions are performed sequentially afterwards,
//! so output bytes do not depend on thread count.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential variant, always available so benchmarks can compare both paths.
pub fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// True when the `parallel` feature is compiled in.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
