use serde::{Deserialize, Serialize};

use crate::dense::{min_norm_solve, numerical_rank, ridge_solve, stack_matrix};
use crate::error::{Error, Result};
use crate::signal::{ConvMode, GridSignal, MeasurementSet, Normalization};

/// Explicit-matrix least squares: minimum-norm solution for `λ = 0`, ridge
/// normal equations otherwise. Limited to small grids.
pub fn dense_oracle(ms: &MeasurementSet, lambda: f64) -> Result<GridSignal> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
    }
    let t = stack_matrix(ms.scales(), ms.mode(), ms.normalization(), ms.source_shape())?;
    let b = ms.flatten();
    let x = if lambda == 0.0 {
        min_norm_solve(&t, &b)
    } else {
        ridge_solve(&t, &b, lambda)?
    };
    GridSignal::new(ms.source_shape().to_vec(), x)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub scales: Vec<usize>,
    pub mode: ConvMode,
    pub shape: Vec<usize>,
    pub rank: usize,
    pub columns: usize,
}

impl RankReport {
    pub fn full_column_rank(&self) -> bool {
        self.rank == self.columns
    }

    pub fn deficiency(&self) -> usize {
        self.columns - self.rank
    }
}

/// Numerical rank of the explicit stacked operator.
pub fn dense_rank(scales: &[usize], mode: ConvMode, shape: &[usize]) -> Result<RankReport> {
    let t = stack_matrix(scales, mode, Normalization::Unit, shape)?;
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    Ok(RankReport {
        scales: sorted,
        mode,
        shape: shape.to_vec(),
        rank: numerical_rank(&t),
        columns: t.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::forward_stack;
    use num_integer::Integer;

    #[test]
    fn invertibility_census() {
        for k1 in 2..=8usize {
            for k2 in k1 + 1..=8 {
                let n = k1 + k2 + 5;
                let r = dense_rank(&[k1, k2], ConvMode::Valid, &[n]).unwrap();
                assert_eq!(r.full_column_rank(), k1.gcd(&k2) == 1, "({k1},{k2})");
            }
        }
    }

    #[test]
    fn short_signals_can_be_deficient() {
        // Below the n ≥ k1 + k2 − 1 hypothesis coprime pairs lose rank.
        let deficient =
            (5..7).any(|n| dense_rank(&[3, 5], ConvMode::Valid, &[n]).unwrap().deficiency() > 0);
        assert!(deficient);
        assert!(dense_rank(&[3, 5], ConvMode::Valid, &[7]).unwrap().full_column_rank());
    }

    #[test]
    fn box_two_fibre_has_common_min_norm_point() {
        // Two length-8 signals with equal 2-box sums.
        let a = GridSignal::from_1d(vec![1., 2., 1., 2., 1., 2., 1., 2.]).unwrap();
        let b = GridSignal::from_1d(vec![2., 1., 2., 1., 2., 1., 2., 1.]).unwrap();
        let ma = forward_stack(&a, &[2], ConvMode::Valid, Normalization::Unit).unwrap();
        let mb = forward_stack(&b, &[2], ConvMode::Valid, Normalization::Unit).unwrap();
        assert_eq!(ma.data(), mb.data());
        let xa = dense_oracle(&ma, 0.0).unwrap();
        let xb = dense_oracle(&mb, 0.0).unwrap();
        assert!(xa.max_abs_diff(&xb) < 1e-12);
        for v in xa.values() {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }
}
