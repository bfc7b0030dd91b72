use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};

/// `sin(kω/2) / (k sin(ω/2))`, the magnitude profile of a mean-normalised
/// 1-D box, continuously extended through the removable singularities.
///
/// `ω` must lie in `[0, 2π]`. The extension gives `1` at `ω = 0` and
/// `(-1)^(k-1)` at `ω = 2π`, so `|f_k| = 1` at both ends.
pub fn periodic_sinc(k: usize, omega: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("box size must be at least 1".into()));
    }
    if !(0.0..=TAU).contains(&omega) {
        return Err(Error::InvalidArgument(format!("frequency {omega} outside [0, 2π]")));
    }
    Ok(sinc_unchecked(k, omega))
}

/// Evaluates the extension for any real `ω` by reducing to `|δ| ≤ π` around
/// the nearest multiple of `2π`.
pub(crate) fn sinc_unchecked(k: usize, omega: f64) -> f64 {
    let j = (omega / TAU).round();
    let delta = omega - j * TAU;
    let sign = if (k - 1) % 2 == 1 && (j as i64) % 2 != 0 { -1.0 } else { 1.0 };
    let kf = k as f64;
    let core = if delta.abs() < 1e-6 {
        1.0 - (kf * kf - 1.0) * delta * delta / 24.0
    } else {
        (kf * delta / 2.0).sin() / (kf * (delta / 2.0).sin())
    };
    sign * core
}

/// `f_k(2π m / n)` with exact zeros: returns `0.0` exactly when `k m / n` is
/// a non-zero integer offset from a multiple of `n`.
pub fn sinc_on_grid(k: usize, n: usize, m: usize) -> f64 {
    let m = m % n;
    if m == 0 {
        return 1.0;
    }
    if (k * m) % n == 0 {
        return 0.0;
    }
    // Both sines in units of π/n, reduced modulo 2n.
    let num = ((k * m) % (2 * n)) as f64 * PI / n as f64;
    let den = m as f64 * PI / n as f64;
    num.sin() / (k as f64 * den.sin())
}

/// Grid DFT of the mean-normalised box `[1/k; k]` (taps at `0..k`):
/// `e^{-i(k-1)ω/2} f_k(ω)` at `ω_m = 2πm/n` for `m in 0..n`.
pub fn box_dft(k: usize, n: usize) -> Result<Vec<Complex64>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "box size {k} must lie in 1..={n}"
        )));
    }
    Ok((0..n).map(|m| box_dft_at(k, n, m)).collect())
}

pub(crate) fn box_dft_at(k: usize, n: usize, m: usize) -> Complex64 {
    let mag = sinc_on_grid(k, n, m);
    // (k-1) ω / 2 = π (k-1) m / n, reduced modulo 2π.
    let phase = (((k - 1) * m) % (2 * n)) as f64 * PI / n as f64;
    Complex64::from_polar(mag, -phase)
}

/// d-dimensional box DFT on a square grid, row-major over `n^d` frequencies.
pub fn box_dft_nd(k: usize, n: usize, d: usize) -> Result<Vec<Complex64>> {
    let axis = box_dft(k, n)?;
    Ok(match d {
        1 => axis,
        2 => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| a * b))
            .collect(),
        _ => return Err(Error::InvalidArgument(format!("dimension {d} not supported"))),
    })
}

/// Zeros of `f_k` in `(0, 2π)`, as reduced fractions `p/q` of `2π`.
pub fn zero_set(k: usize) -> Vec<(usize, usize)> {
    (1..k)
        .map(|m| {
            let g = m.gcd(&k);
            (m / g, k / g)
        })
        .collect()
}

/// Whether `Z_k1 ∩ Z_k2` is non-empty, by exact comparison of fractions.
pub fn zero_sets_intersect(k1: usize, k2: usize) -> bool {
    let z2 = zero_set(k2);
    zero_set(k1).iter().any(|f| z2.contains(f))
}

/// Whether `2π p / q` is a zero of `f_k` (exact).
pub fn is_zero_frequency(k: usize, p: usize, q: usize) -> bool {
    q != 0 && p % q != 0 && (k * p) % q == 0
}

/// Number of grid frequencies in `(2π/n)[n]^d` with `|b_k(ω)| ≤ epsilon`.
pub fn near_zero_count(k: usize, n: usize, d: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("box size and grid length must be positive".into()));
    }
    let axis: Vec<f64> = (0..n).map(|m| sinc_on_grid(k, n, m).abs()).collect();
    Ok(match d {
        1 => axis.iter().filter(|&&v| v <= epsilon).count(),
        2 => axis
            .iter()
            .map(|&a| axis.iter().filter(|&&b| a * b <= epsilon).count())
            .sum(),
        _ => return Err(Error::InvalidArgument(format!("dimension {d} not supported"))),
    })
}

/// Asymptotic lower bound `d(k-1)n^{d-1} - C(d,2)(k-1)^2 n^{d-2}` on the
/// near-zero count (for `n` large relative to `1/epsilon`).
pub fn near_zero_lower_bound(k: usize, n: usize, d: usize) -> i64 {
    let (k, n, d) = (k as i64, n as i64, d as i64);
    let lines = d * (k - 1) * n.pow((d - 1) as u32);
    let crossings = if d >= 2 {
        d * (d - 1) / 2 * (k - 1).pow(2) * n.pow((d - 2) as u32)
    } else {
        0
    };
    lines - crossings
}

/// Samples of `f_k` on `[0, 2π]`.
#[derive(Clone, Debug)]
pub struct SincProfile {
    pub k: usize,
    /// `(ω, f_k(ω))` pairs at `count` evenly spaced points including both ends.
    pub samples: Vec<(f64, f64)>,
}

impl SincProfile {
    pub fn sample(k: usize, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let samples = (0..count)
            .map(|i| {
                let w = TAU * i as f64 / (count - 1) as f64;
                periodic_sinc(k, w.min(TAU)).map(|v| (w, v))
            })
            .collect::<Result<_>>()?;
        Ok(SincProfile { k, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_dft(taps: &[f64], n: usize, m: usize) -> Complex64 {
        taps.iter()
            .enumerate()
            .map(|(a, &v)| Complex64::from_polar(v, -TAU * ((a * m) % n) as f64 / n as f64))
            .sum()
    }

    #[test]
    fn endpoints_and_zeros() {
        for k in 1..12 {
            assert_eq!(periodic_sinc(k, 0.0).unwrap(), 1.0);
            assert!((periodic_sinc(k, TAU).unwrap().abs() - 1.0).abs() < 1e-12);
        }
        assert!(periodic_sinc(2, PI).unwrap().abs() < 1e-15);
        assert!(periodic_sinc(3, TAU / 3.0).unwrap().abs() < 1e-15);
        assert!(periodic_sinc(3, -0.1).is_err());
        assert!(periodic_sinc(3, 7.0).is_err());
    }

    #[test]
    fn continuity_at_two_pi() {
        for k in 1..9 {
            let near = periodic_sinc(k, TAU - 1e-4).unwrap();
            let at = periodic_sinc(k, TAU).unwrap();
            assert!((near - at).abs() < 1e-5, "k={k}");
        }
    }

    #[test]
    fn f7_matches_direct_dft_magnitude() {
        let n = 1024;
        let taps = [1.0 / 7.0; 7];
        for m in 0..n {
            let want = direct_dft(&taps, n, m).norm();
            let got = periodic_sinc(7, TAU * m as f64 / n as f64).unwrap().abs();
            assert!((got - want).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn box_dft_examples() {
        let b = box_dft(2, 4).unwrap();
        let mags: Vec<f64> = b.iter().map(|c| c.norm()).collect();
        let h = 0.5f64.sqrt();
        for (g, w) in mags.iter().zip([1.0, h, 0.0, h]) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(box_dft(3, 8).unwrap().iter().all(|c| c.norm() > 0.0));
        let full = box_dft(5, 5).unwrap();
        assert_eq!(full[0], Complex64::new(1.0, 0.0));
        assert!(full[1..].iter().all(|c| c.norm() == 0.0));
        assert!(box_dft(5, 4).is_err());
    }

    #[test]
    fn box_dft_matches_direct_sum() {
        for (k, n) in [(2, 4), (3, 8), (7, 20), (6, 6), (5, 33)] {
            let taps = vec![1.0 / k as f64; k];
            for (m, got) in box_dft(k, n).unwrap().iter().enumerate() {
                assert!((got - direct_dft(&taps, n, m)).norm() < 1e-12, "k={k} n={n} m={m}");
            }
        }
    }

    #[test]
    fn box_dft_2d_factorises() {
        let (k, n) = (3, 7);
        let b2 = box_dft_nd(k, n, 2).unwrap();
        let w = 1.0 / 9.0;
        for m1 in 0..n {
            for m2 in 0..n {
                let mut want = Complex64::default();
                for a in 0..k {
                    for b in 0..k {
                        let th = -TAU * ((a * m1 + b * m2) % n) as f64 / n as f64;
                        want += Complex64::from_polar(w, th);
                    }
                }
                assert!((b2[m1 * n + m2] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_sets_meet_iff_common_factor() {
        for k1 in 2..20usize {
            for k2 in 2..20usize {
                assert_eq!(zero_sets_intersect(k1, k2), k1.gcd(&k2) > 1, "{k1},{k2}");
            }
        }
        assert!(is_zero_frequency(9, 1, 3));
        assert!(!is_zero_frequency(11, 1, 3));
        assert!(!is_zero_frequency(4, 0, 3));
    }

    #[test]
    fn near_zero_examples() {
        assert!(near_zero_count(4, 1024, 1, 0.01).unwrap() >= 3);
        assert_eq!(near_zero_count(4, 64, 1, 1.0).unwrap(), 64);
        assert_eq!(near_zero_count(3, 20, 2, 1.0).unwrap(), 400);
        let bound = near_zero_lower_bound(3, 300, 2);
        assert_eq!(bound, 1196);
        assert!(near_zero_count(3, 300, 2, 1e-12).unwrap() as i64 >= bound);
        assert!(near_zero_count(3, 300, 2, 0.0).is_err());
    }

    #[test]
    fn near_zero_bound_holds_for_large_n() {
        // Around each zero of f_k the profile is linear with slope ~ 1/(2 sin(π m/k)),
        // so epsilon = 4/n captures at least one neighbour per zero line.
        for (k, n) in [(3usize, 301usize), (4, 401), (5, 250)] {
            let eps = 4.0 / n as f64;
            for d in 1..=2 {
                let c = near_zero_count(k, n, d, eps).unwrap() as i64;
                assert!(c >= near_zero_lower_bound(k, n, d), "k={k} n={n} d={d}");
            }
        }
    }

    proptest! {
        #[test]
        fn bounded_by_one(k in 1usize..40, w in 0.0f64..TAU) {
            let v = periodic_sinc(k, w).unwrap();
            prop_assert!(v.abs() <= 1.0 + 1e-12);
            if k >= 2 && w > 1e-3 && w < TAU - 1e-3 {
                prop_assert!(v.abs() < 1.0);
            }
        }

        #[test]
        fn grid_matches_continuous(k in 1usize..30, n in 1usize..200, m in 0usize..200) {
            let m = m % n;
            let w = TAU * m as f64 / n as f64;
            prop_assert!((sinc_on_grid(k, n, m) - sinc_unchecked(k, w)).abs() < 1e-9);
        }
    }
}
