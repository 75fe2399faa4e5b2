//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) `Execution::Parallel` fans work out
//! over rayon. Without it every call runs in order on the current thread.
//! Results are always returned in input order, so reductions performed by
//! callers stay deterministic.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(exec, items.len(), |i| f(&items[i]))
}

/// Run `f` on a pool with `workers` threads. `None` uses the global pool.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let a = map_range(Execution::Parallel, 100, |i| i * i);
        let b = map_range(Execution::Sequential, 100, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }

    #[test]
    fn worker_pool_runs_closure() {
        let v = with_workers(Some(2), || map_slice(Execution::Parallel, &[1, 2, 3], |x| x + 1));
        assert_eq!(v, vec![2, 3, 4]);
    }
}
