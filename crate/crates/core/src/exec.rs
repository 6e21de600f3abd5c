//! Row-parallel evaluation with a sequential fallback.
//!
//! Every helper here maps an index to a value independently, and each value
//! is computed by the same sequential code whichever backend runs it, so
//! results are bit-identical between backends.

/// Requested execution backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled and the job is large enough.
    #[default]
    Auto,
    Sequential,
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    Parallel,
}

/// Below this many indices `Auto` stays sequential.
const AUTO_MIN_LEN: usize = 64;

impl Execution {
    pub fn is_parallel(self, len: usize) -> bool {
        if !cfg!(feature = "parallel") {
            return false;
        }
        match self {
            Execution::Sequential => false,
            Execution::Parallel => true,
            Execution::Auto => len >= AUTO_MIN_LEN,
        }
    }
}

/// `(start..end).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(exec: Execution, start: usize, end: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel(end.saturating_sub(start)) {
            use rayon::prelude::*;
            return (start..end).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (start..end).map(f).collect()
}

/// `map_range(exec, 0, len, f)`.
pub fn map_indices<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range(exec, 0, len, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backends_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = map_indices(Execution::Sequential, 1000, f);
        let b = map_indices(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
        assert_eq!(map_range(Execution::Auto, 3, 7, |i| i), vec![3, 4, 5, 6]);
    }
}
