//! Deterministic parallel map over trial indices.

use rayon::prelude::*;

/// Evaluates `f(0), ..., f(n-1)` concurrently and returns the results in
/// index order. `workers = None` uses the global rayon pool; results never
/// depend on the worker count.
pub fn map_indexed<T, F>(n: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_index_order() {
        for w in [None, Some(1), Some(3)] {
            let v = map_indexed(1000, w, |i| i * i);
            assert!(v.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
        }
    }
}
