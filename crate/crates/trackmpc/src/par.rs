//! Data-parallel helpers.
//!
//! The batch loops in this crate (redundancy pruning, admissible-set
//! recursion, point sampling checks) map an independent closure over a range
//! of indices. With the `rayon` feature (default) these run on the rayon
//! pool; without it they fall back to a plain sequential loop. Results are
//! collected in index order either way, so outputs are bit-identical across
//! both modes.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "rayon")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "rayon"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential variant, kept unconditionally for benchmark comparison.
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
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sqrt() * 3.0 - 1.0;
        assert_eq!(map_indexed(257, f), map_indexed_seq(257, f));
    }
}
