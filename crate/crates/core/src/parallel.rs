//! Data-parallel execution shim.
//!
//! Simulation runs share nothing, so suites and experiment matrices map
//! cleanly onto a work-stealing pool. With the `parallel` feature enabled
//! (the default) [`map_indexed`] dispatches through rayon; without it the
//! crate has no rayon dependency and every entry point degrades to the
//! sequential loop. [`map_indexed_seq`] is always available so benchmarks
//! can compare both paths within one build.
//!
//! Results are collected in index order either way, so the output — and
//! everything derived from it — is identical across both paths.

/// Apply `f` to `0..n`, collecting results in index order.
///
/// Runs on the rayon pool when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to `0..n`, collecting results in index order.
///
/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    map_indexed_seq(n, f)
}

/// Sequential version of [`map_indexed`], available regardless of features.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_paths_agree_in_order_and_content() {
        let square = |i: usize| i * i;
        assert_eq!(map_indexed(100, square), map_indexed_seq(100, square));
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let out: Vec<usize> = map_indexed(0, |i| i);
        assert!(out.is_empty());
    }
}
