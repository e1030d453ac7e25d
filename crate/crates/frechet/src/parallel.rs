//! Thin switch between rayon data-parallel loops and a sequential fallback.
//!
//! Every parallel site in the crate funnels through [`map_indexed`] so that
//! results are collected in input order: the output is bit-identical for any
//! thread count, and the `parallel` feature can be disabled entirely.

/// Applies `f` to `0..n` and collects results in index order.
///
/// With the `parallel` feature enabled and `threads > 1`, the work runs on a
/// dedicated rayon pool of that size; otherwise it runs sequentially.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 1 && n > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to build rayon pool");
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    let _ = threads;
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] but reuses the ambient rayon pool when one is already
/// installed (nested use inside `map_indexed` workers stays sequential).
pub fn map_indexed_nested<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 1 && n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(&f).collect();
        }
    }
    let _ = threads;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let seq = map_indexed(100, 1, |i| (i as f64).sin());
        let par = map_indexed(100, 4, |i| (i as f64).sin());
        assert_eq!(seq, par);
    }
}
