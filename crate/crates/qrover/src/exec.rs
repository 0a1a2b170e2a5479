//! Execution strategy for per-item workloads.
//!
//! Dataset verification, attack sweeps, and gradient evaluations are all
//! embarrassingly parallel over independent items. [`map_items`] runs such a
//! map either sequentially or on a rayon pool, controlled at runtime by a
//! [`Jobs`] value and at compile time by the `parallel` cargo feature (with
//! the feature disabled every call degrades to the sequential path).
//!
//! Results are always collected in input order, and each item's computation
//! is internally sequential, so the output is bit-identical regardless of the
//! job count.

/// Degree of parallelism for item-level maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jobs {
    /// One item at a time on the calling thread.
    Sequential,
    /// Rayon's default pool size (number of logical CPUs).
    Auto,
    /// A pool of exactly `n` threads (`n ≥ 1`; `1` is equivalent to
    /// `Sequential`).
    Threads(usize),
}

impl Jobs {
    /// Parse a `--jobs` style argument: `0` means `Auto`, `1` means
    /// `Sequential`, anything else a fixed pool size.
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => Jobs::Auto,
            1 => Jobs::Sequential,
            n => Jobs::Threads(n),
        }
    }
}

impl Default for Jobs {
    fn default() -> Self {
        Jobs::Auto
    }
}

/// Apply `f` to every element of `items`, returning outputs in input order.
///
/// With the `parallel` feature enabled and `jobs` not `Sequential`, items are
/// distributed over a rayon pool; otherwise they are processed in order on
/// the calling thread. The mapping function must be deterministic per item
/// for the cross-jobs reproducibility guarantee to hold (all callers in this
/// crate derive any per-item randomness from `seed ⊕ item_index`).
pub fn map_items<T, U, F>(jobs: Jobs, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match jobs {
            Jobs::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            Jobs::Auto => items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            Jobs::Threads(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .expect("failed to build thread pool");
                pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Sum `f(i)` for `i` in `0..n`, parallelized like [`map_items`].
///
/// Used by grid sweeps that reduce with `min`/`sum`; the reduction operator
/// must be associative and commutative enough for the caller's tolerance
/// (tests that require bit-exact output use `map_items` and fold
/// sequentially instead).
pub fn min_over<F>(jobs: Jobs, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = |iter: rayon::range::Iter<usize>| -> f64 {
            iter.map(&f).reduce(|| f64::INFINITY, f64::min)
        };
        match jobs {
            Jobs::Sequential => (0..n).map(&f).fold(f64::INFINITY, f64::min),
            Jobs::Auto => run((0..n).into_par_iter()),
            Jobs::Threads(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t.max(1))
                    .build()
                    .expect("failed to build thread pool");
                pool.install(|| run((0..n).into_par_iter()))
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        (0..n).map(&f).fold(f64::INFINITY, f64::min)
    }
}
