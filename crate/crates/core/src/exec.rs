//! Execution policy for the data-parallel loops.
//!
//! [`Execution::Parallel`] maps work onto the rayon global pool when the crate
//! is built with the `parallel` feature. Without the feature it degrades to
//! the sequential path, so callers never need their own `cfg` switches.
//! Results are always returned in index order regardless of scheduling.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluate `f` on every index of `range`, collecting in index order.
    pub fn map_range<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// Evaluate `f` on every item, collecting in input order.
    pub fn map_slice<'a, S, T, F>(self, items: &'a [S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&'a S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Each index produces a batch; batches are concatenated in index order.
    pub fn flat_map_range<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> Vec<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let batches: Vec<Vec<T>> = range.into_par_iter().map(f).collect();
            let total = batches.iter().map(Vec::len).sum();
            let mut out = Vec::with_capacity(total);
            for b in batches {
                out.extend(b);
            }
            return out;
        }
        let mut out = Vec::new();
        for i in range {
            out.extend(f(i));
        }
        out
    }

    pub fn sort_f64(self, values: &mut [f64]) {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            values.par_sort_unstable_by(f64::total_cmp);
            return;
        }
        values.sort_unstable_by(f64::total_cmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = exec.map_range(0..100, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
            let w = exec.flat_map_range(0..10, |i| vec![i; i]);
            assert_eq!(w.len(), 45);
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn sort_handles_both_modes() {
        let mut a = vec![0.5, -1.0, 3.25, 0.0];
        let mut b = a.clone();
        Execution::Sequential.sort_f64(&mut a);
        Execution::Parallel.sort_f64(&mut b);
        assert_eq!(a, b);
        assert_eq!(a, vec![-1.0, 0.0, 0.5, 3.25]);
    }
}
