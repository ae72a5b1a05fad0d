//! Order-preserving map over indices, parallel when the `parallel` feature is on.

#[cfg(feature = "parallel")]
pub fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Like `map` but short-circuits on the first error in index order.
pub fn try_map<T: Send, E: Send, F: Fn(usize) -> Result<T, E> + Sync + Send>(n: usize, f: F) -> Result<Vec<T>, E> {
    map(n, f).into_iter().collect()
}
