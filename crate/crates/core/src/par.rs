//! Site-loop helpers with a sequential fallback.
//!
//! Reductions split work into fixed-size chunks and combine the partial sums
//! in chunk order, so results do not depend on the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const CHUNK: usize = 1024;

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_indexed(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.iter().sum()
}

/// Deterministic component-wise sum of `f(i)` over `0..n`.
pub fn sum_indexed_array<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_indexed(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = [0.0; K];
        for i in lo..hi {
            let v = f(i);
            for k in 0..K {
                acc[k] += v[k];
            }
        }
        acc
    });
    let mut total = [0.0; K];
    for p in &partial {
        for k in 0..K {
            total[k] += p[k];
        }
    }
    total
}

pub fn sum_slice(values: &[f64]) -> f64 {
    sum_indexed(values.len(), |i| values[i])
}

/// Applies `f` to every element in place.
pub fn for_each_mut<T, F>(values: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        values.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
    #[cfg(not(feature = "parallel"))]
    {
        values.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
}

/// Configures the global worker pool from `DTIL_THREADS` (unset: all cores).
/// Returns the number of threads in use.
pub fn init_threads_from_env() -> usize {
    let requested = std::env::var("DTIL_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok());
    #[cfg(feature = "parallel")]
    {
        if let Some(k) = requested.filter(|&k| k > 0) {
            // a second initialisation in the same process is a no-op
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_are_independent_of_chunking() {
        let n = 10_000;
        let a = sum_indexed(n, |i| (i as f64).sin());
        let b = sum_indexed(n, |i| (i as f64).sin());
        assert_eq!(a.to_bits(), b.to_bits());
        let arr = sum_indexed_array(n, |i| [(i as f64).sin(), 1.0]);
        assert_eq!(arr[0].to_bits(), a.to_bits());
        assert_eq!(arr[1], n as f64);
    }
}
