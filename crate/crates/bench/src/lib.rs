//! Shared inputs for the evaluation benchmarks.

/// Evenly spaced sample points on `[from, to]`.
pub fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![from];
    }
    (0..n)
        .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
        .collect()
}
