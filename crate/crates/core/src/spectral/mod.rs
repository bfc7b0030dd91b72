//! Spectral stability analysis of stacked cyclic box operators.
//!
//! Under cyclic convolution every box filter is diagonalised by the DFT, so
//! the stacked operator's singular values are `f(ω) = sqrt(Σ_j Π_ℓ f_{k_j}²(ω_ℓ))`
//! on the frequency grid. Condition numbers and least-squares error
//! predictions follow directly from that profile.

mod sinc;
mod trace;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Normalization;

pub use sinc::{
    box_dft, box_dft_nd, is_zero_frequency, near_zero_count, near_zero_lower_bound,
    periodic_sinc, sinc_on_grid, zero_set, zero_sets_intersect, SincProfile,
};
pub use trace::{
    asymptotic_trace, continuum_minimum, cyclic_trace, has_continuum_zero, valid_mode_trace,
    ContinuumMinimum,
};

/// Singular values of the stacked cyclic operator on the grid `(2π/n)[n]^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub ndim: usize,
    pub n: usize,
    pub scales: Vec<usize>,
    pub normalization: Normalization,
    /// Row-major over the `n^d` grid frequencies.
    pub sigma_values: Vec<f64>,
}

/// Mean-normalised profile.
pub fn stacked_profile(scales: &[usize], n: usize, d: usize) -> Result<SpectralProfile> {
    stacked_profile_with(scales, n, d, Normalization::Mean)
}

/// Profile for either normalization; a window-sum box scales its singular
/// values by `k^d`.
pub fn stacked_profile_with(
    scales: &[usize],
    n: usize,
    d: usize,
    normalization: Normalization,
) -> Result<SpectralProfile> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("at least one box size is required".into()));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidArgument(format!("dimension {d} not supported")));
    }
    if let Some(&k) = scales.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::KernelTooLarge {
            k,
            n,
            mode: crate::signal::ConvMode::Cyclic,
        });
    }
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    // Squared per-axis values, with the normalization gain folded into one axis.
    let axis_sq: Vec<Vec<f64>> = sorted
        .iter()
        .map(|&k| (0..n).map(|m| sinc_on_grid(k, n, m).powi(2)).collect())
        .collect();
    let gains: Vec<f64> = sorted
        .iter()
        .map(|&k| ((k as f64).powi(d as i32) / normalization.divisor(k, d)).powi(2))
        .collect();
    let sigma_values = match d {
        1 => (0..n)
            .map(|m| {
                axis_sq
                    .iter()
                    .zip(&gains)
                    .map(|(a, g)| g * a[m])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for m1 in 0..n {
                for m2 in 0..n {
                    let s: f64 = axis_sq
                        .iter()
                        .zip(&gains)
                        .map(|(a, g)| g * a[m1] * a[m2])
                        .sum();
                    out.push(s.sqrt());
                }
            }
            out
        }
    };
    Ok(SpectralProfile {
        ndim: d,
        n,
        scales: sorted,
        normalization,
        sigma_values,
    })
}

impl SpectralProfile {
    pub fn max(&self) -> f64 {
        self.sigma_values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.sigma_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid indices of the smallest singular value.
    pub fn argmin(&self) -> Vec<usize> {
        let (i, _) = self
            .sigma_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        self.unflatten(i)
    }

    /// First grid frequency with an exactly zero singular value.
    pub fn first_zero(&self) -> Option<Vec<usize>> {
        self.sigma_values
            .iter()
            .position(|&v| v == 0.0)
            .map(|i| self.unflatten(i))
    }

    pub fn unflatten(&self, i: usize) -> Vec<usize> {
        match self.ndim {
            1 => vec![i],
            _ => vec![i / self.n, i % self.n],
        }
    }

    /// Angular frequency of grid index `m`.
    pub fn omega(&self, m: usize) -> f64 {
        std::f64::consts::TAU * m as f64 / self.n as f64
    }

    /// Lower bound on the normalized trace: `k^d / s` with `k` the smallest
    /// box for mean normalization, the Jensen bound `1 / mean(f²)` otherwise.
    pub fn tradeoff_lower_bound(&self) -> f64 {
        match self.normalization {
            Normalization::Mean => {
                let k = self.scales[0] as f64;
                k.powi(self.ndim as i32) / self.scales.len() as f64
            }
            Normalization::Unit => {
                let count = self.sigma_values.len() as f64;
                count / self.sigma_values.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.sigma_values.iter().all(|&v| v > 0.0)
    }
}

/// Whether every pair of sizes is coprime.
pub fn pairwise_coprime(scales: &[usize]) -> bool {
    scales
        .iter()
        .enumerate()
        .all(|(i, a)| scales[i + 1..].iter().all(|b| a.gcd(b) == 1))
}

/// `κ = σ_max / σ_min`, possibly infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionNumber {
    /// `f64::INFINITY` when some singular value is exactly zero.
    pub value: f64,
    pub infinite: bool,
    /// `σ_max` over the smallest non-zero singular value.
    pub largest_finite_ratio: Option<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

pub fn condition_number(profile: &SpectralProfile) -> ConditionNumber {
    let sigma_max = profile.max();
    let sigma_min = profile.min();
    let min_nonzero = profile
        .sigma_values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let infinite = sigma_min == 0.0;
    ConditionNumber {
        value: if infinite { f64::INFINITY } else { sigma_max / sigma_min },
        infinite,
        largest_finite_ratio: min_nonzero.is_finite().then(|| sigma_max / min_nonzero),
        sigma_max,
        sigma_min,
    }
}

/// Expected least-squares reconstruction error for i.i.d. noise of level `sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPrediction {
    /// `tr((T'T)^{-1}) / n^d`.
    pub trace_normalized: f64,
    /// `sqrt(trace_normalized)`: RMSE per unit noise.
    pub rmse_factor: f64,
    /// `sigma² · trace_normalized`, the expected per-pixel squared error.
    pub mse: f64,
    pub sigma: f64,
    /// `k^d / s` with `k` the smallest box, for mean normalization; the
    /// Jensen bound `1 / mean(f²)` otherwise.
    pub lower_bound: f64,
    /// Large-`n` limit of `trace_normalized`, when computed.
    pub asymptotic_value: Option<f64>,
}

pub fn predicted_mse(profile: &SpectralProfile, sigma: f64) -> Result<ErrorPrediction> {
    if let Some(freq) = profile.first_zero() {
        return Err(Error::NonInvertible {
            detail: format!("singular value vanishes at grid frequency {freq:?}"),
            frequency: Some(freq),
        });
    }
    let count = profile.sigma_values.len() as f64;
    let trace_normalized = profile
        .sigma_values
        .iter()
        .map(|v| 1.0 / (v * v))
        .sum::<f64>()
        / count;
    let lower_bound = profile.tradeoff_lower_bound();
    Ok(ErrorPrediction {
        trace_normalized,
        rmse_factor: trace_normalized.sqrt(),
        mse: sigma * sigma * trace_normalized,
        sigma,
        lower_bound,
        asymptotic_value: None,
    })
}

impl ErrorPrediction {
    /// Fills in the large-`n` quadrature value.
    pub fn with_asymptotic(mut self, profile: &SpectralProfile) -> Result<Self> {
        self.asymptotic_value = Some(asymptotic_trace(&profile.scales, profile.ndim, 0)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::stack_matrix;
    use crate::signal::ConvMode;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn dense_cyclic_trace(scales: &[usize], n: usize, d: usize) -> f64 {
        let shape = vec![n; d];
        let t = stack_matrix(scales, ConvMode::Cyclic, Normalization::Mean, &shape).unwrap();
        let eig = SymmetricEigen::new(t.tr_mul(&t));
        eig.eigenvalues.iter().map(|l| 1.0 / l).sum::<f64>() / t.ncols() as f64
    }

    #[test]
    fn profile_peak_is_sqrt_s() {
        let p = stacked_profile(&[9, 11], 200, 1).unwrap();
        assert!((p.max() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.sigma_values[0], p.max());
        let p3 = stacked_profile(&[2, 3, 5], 30, 2).unwrap();
        assert!((p3.max() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shared_factor_vanishes_at_two_pi_over_three() {
        let p = stacked_profile(&[9, 12], 99, 1).unwrap();
        assert_eq!(p.min(), 0.0);
        assert_eq!(p.sigma_values[33], 0.0);
        assert_eq!(p.first_zero(), Some(vec![33]));
    }

    #[test]
    fn uniform_filter_has_one_nonzero() {
        let p = stacked_profile(&[16], 16, 1).unwrap();
        assert_eq!(p.sigma_values.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn unit_profile_scales_by_window_area() {
        let m = stacked_profile(&[3], 10, 2).unwrap();
        let u = stacked_profile_with(&[3], 10, 2, Normalization::Unit).unwrap();
        for (a, b) in m.sigma_values.iter().zip(&u.sigma_values) {
            assert!((a * 9.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_matches_dense_singular_values() {
        for (scales, n, d) in [(vec![2, 3], 12, 1), (vec![2, 3, 5], 10, 2), (vec![4, 6], 14, 1)] {
            let p = stacked_profile(&scales, n, d).unwrap();
            let t = stack_matrix(&scales, ConvMode::Cyclic, Normalization::Mean, &vec![n; d]).unwrap();
            let mut dense: Vec<f64> = t.singular_values().iter().copied().collect();
            let mut ours = p.sigma_values.clone();
            dense.sort_by(f64::total_cmp);
            ours.sort_by(f64::total_cmp);
            for (a, b) in dense.iter().zip(&ours) {
                assert!((a - b).abs() < 1e-10, "{scales:?} {n} {d}");
            }
        }
    }

    #[test]
    fn condition_number_dichotomy() {
        let kappa = |n| condition_number(&stacked_profile(&[9, 11], n, 1).unwrap()).value;
        let bound = continuum_minimum(&[9, 11], 1, 20_000).unwrap().kappa_bound;
        for n in [110, 330, 990, 9900] {
            assert!(kappa(n) <= bound * (1.0 + 1e-9), "n={n}");
        }
        // Both grids contain the continuum minimiser 2π·109/198.
        assert!((kappa(990) - kappa(9900)).abs() < 1e-9 * kappa(990));
        let bad = condition_number(&stacked_profile(&[9, 12], 990, 1).unwrap());
        assert!(bad.infinite && bad.value.is_infinite());
        assert!(bad.largest_finite_ratio.unwrap().is_finite());
    }

    #[test]
    fn identity_prediction() {
        let e = predicted_mse(&stacked_profile(&[1], 37, 1).unwrap(), 2.0).unwrap();
        assert_eq!(e.trace_normalized, 1.0);
        assert_eq!(e.rmse_factor, 1.0);
        assert_eq!(e.mse, 4.0);
    }

    #[test]
    fn prediction_matches_dense_trace() {
        for (scales, n, d) in [
            (vec![2, 3], 12, 1),
            (vec![3, 5], 64, 1),
            (vec![9, 11], 40, 1),
            (vec![2, 3, 5], 8, 2),
            (vec![2, 3, 7], 12, 2),
        ] {
            let e = predicted_mse(&stacked_profile(&scales, n, d).unwrap(), 1.0).unwrap();
            let want = dense_cyclic_trace(&scales, n, d);
            assert!((e.trace_normalized - want).abs() < 1e-9 * want, "{scales:?}");
        }
    }

    #[test]
    fn non_invertible_names_frequency() {
        let err = predicted_mse(&stacked_profile(&[2, 4], 8, 1).unwrap(), 1.0).unwrap_err();
        match err {
            Error::NonInvertible { frequency, .. } => assert_eq!(frequency, Some(vec![4])),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn coprimality() {
        assert!(pairwise_coprime(&[9, 10, 11]));
        assert!(!pairwise_coprime(&[9, 10, 12]));
        assert!(pairwise_coprime(&[7]));
    }

    proptest! {
        #[test]
        fn profile_bounded_by_sqrt_s(k1 in 1usize..12, k2 in 1usize..12, n in 12usize..60) {
            prop_assume!(k1 != k2);
            let p = stacked_profile(&[k1, k2], n, 1).unwrap();
            prop_assert!(p.sigma_values.iter().all(|&v| v >= 0.0 && v <= 2f64.sqrt() + 1e-12));
        }

        #[test]
        fn coprime_profile_is_positive(k1 in 2usize..15, k2 in 2usize..15, n in 15usize..90) {
            prop_assume!(k1.gcd(&k2) == 1);
            prop_assert!(stacked_profile(&[k1, k2], n, 1).unwrap().is_strictly_positive());
        }

        #[test]
        fn trace_above_tradeoff_bound(k1 in 2usize..10, k2 in 2usize..10, n in 10usize..60) {
            prop_assume!(k1.gcd(&k2) == 1);
            let e = predicted_mse(&stacked_profile(&[k1, k2], n, 1).unwrap(), 1.0).unwrap();
            prop_assert!(e.trace_normalized >= e.lower_bound);
        }
    }
}
