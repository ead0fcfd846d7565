//! Execution policy for the data-parallel loops.
//!
//! Every hot loop in the crate (rows of an operator, cubes of a family,
//! members of a sample, column pairs of a Jacobi sweep) goes through the
//! helpers here. With the `parallel` feature they run on rayon; without
//! it, or inside [`sequential`], they run on the calling thread. Results
//! are collected in index order and reductions are max-only, so both
//! paths produce bit-identical output.

use std::cell::Cell;

/// How the data-parallel helpers schedule their work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// The policy in effect on the current thread.
pub fn current() -> Execution {
    if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(Cell::get) {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Run `f` with every helper forced onto the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    with_execution(Execution::Sequential, f)
}

/// Run `f` under the given policy. `Parallel` is a no-op request when the
/// crate is built without the `parallel` feature.
pub fn with_execution<R>(policy: Execution, f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            FORCE_SEQUENTIAL.with(|c| c.set(self.0));
        }
    }
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(policy == Execution::Sequential));
    let _restore = Restore(prev);
    f()
}

/// Cap the global worker pool. Only the first call has an effect; returns
/// false if the pool was already initialised (or the feature is off).
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel, always in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible [`map_range`]; the first error in index order is returned.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}

/// Apply `f` to every element of `items` in place.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    match current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter_mut().for_each(f)
        }
        _ => items.iter_mut().for_each(f),
    }
}

/// Elementwise maximum of per-chunk vectors: `out[i] = max_k f(k)[i]`.
/// Used when each task produces a full-length candidate array.
pub fn max_merge<F>(tasks: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunk = tasks.div_ceil(workers()).max(1);
    let partial = map_range(tasks.div_ceil(chunk), |c| {
        let mut acc = vec![f64::NEG_INFINITY; len];
        for k in c * chunk..((c + 1) * chunk).min(tasks) {
            f(k, &mut acc);
        }
        acc
    });
    let mut out = vec![f64::NEG_INFINITY; len];
    for acc in partial {
        for (o, a) in out.iter_mut().zip(acc) {
            if a > *o {
                *o = a;
            }
        }
    }
    out
}

fn workers() -> usize {
    match current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => rayon::current_num_threads().max(1) * 4,
        _ => 1,
    }
}
