use crate::error::{Error, Result};
use crate::signal::GridSignal;

/// The `k`-periodic sequence `1, −1, 0, …, 0` of length `n`: every window of
/// `k` consecutive samples sums to zero.
pub fn nullspace_pattern(k: usize, n: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "a box of size {k} has no non-trivial periodic nullspace"
        )));
    }
    Ok((0..n)
        .map(|i| match i % k {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        })
        .collect())
}

/// Outer product `x1 x2'` of the size-`k1` pattern (rows) and the size-`k2`
/// pattern (columns) on an `n × n` grid. Every `k1 × k1` and every `k2 × k2`
/// window of it sums to zero, so valid window sums at both sizes cannot see it.
pub fn nullspace_witness(k1: usize, k2: usize, n: usize) -> Result<GridSignal> {
    if n < k1.max(k2) {
        return Err(Error::InvalidShape(format!(
            "grid of {n} cannot host windows of sizes {k1} and {k2}"
        )));
    }
    let rows = nullspace_pattern(k1, n)?;
    let cols = nullspace_pattern(k2, n)?;
    GridSignal::from_fn_2d(n, n, |i, j| rows[i] * cols[j])
}
