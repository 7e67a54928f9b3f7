//! Indexed map that runs on a rayon pool when the `parallel` feature is on.
//!
//! Results come back ordered by index regardless of schedule, so callers that
//! fold them sequentially are bitwise independent of the thread count.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match threads {
        1 => (0..n).map(f).collect(),
        0 => (0..n).into_par_iter().map(f).collect(),
        t => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .expect("failed to build thread pool");
            pool.install(|| (0..n).into_par_iter().map(f).collect())
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, _threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
