use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use num_integer::Integer;
use rayon::prelude::*;

use super::sinc::sinc_unchecked;
use super::{predicted_mse, stacked_profile};
use crate::dense::stack_matrix;
use crate::error::{Error, Result};
use crate::signal::{ConvMode, Normalization};

/// Normalized trace `tr((T'T)^{-1}) / n^d` of the cyclic operator.
pub fn cyclic_trace(scales: &[usize], n: usize, d: usize) -> Result<f64> {
    Ok(predicted_mse(&stacked_profile(scales, n, d)?, 1.0)?.trace_normalized)
}

/// Whether `f` vanishes somewhere on the continuum `[0, 2π]^d`.
///
/// Every term `Π_ℓ f_{k_j}(ω_ℓ)` must vanish, so each scale needs an axis on
/// which `ω_ℓ` is one of its zeros; an axis can serve a group of scales iff
/// their gcd is at least 2. Assignments are enumerated exhaustively.
pub fn has_continuum_zero(scales: &[usize], d: usize) -> bool {
    if scales.contains(&1) {
        return false;
    }
    let s = scales.len();
    let total = d.pow(s as u32);
    (0..total).any(|code| {
        let mut gcds = vec![0usize; d];
        let mut c = code;
        for &k in scales {
            let axis = c % d;
            c /= d;
            gcds[axis] = gcds[axis].gcd(&k);
        }
        gcds.iter().all(|&g| g != 1)
    })
}

/// Midpoint-rule value of `(2π)^{-d} ∫ dω / f(ω)²` on a `grid^d` lattice.
pub fn quadrature_trace(scales: &[usize], d: usize, grid: usize) -> f64 {
    let axis_sq: Vec<Vec<f64>> = scales
        .iter()
        .map(|&k| {
            (0..grid)
                .map(|m| sinc_unchecked(k, TAU * (m as f64 + 0.5) / grid as f64).powi(2))
                .collect()
        })
        .collect();
    let total: f64 = match d {
        1 => (0..grid)
            .map(|m| 1.0 / axis_sq.iter().map(|a| a[m]).sum::<f64>())
            .sum(),
        _ => (0..grid)
            .into_par_iter()
            .map(|m1| {
                (0..grid)
                    .map(|m2| 1.0 / axis_sq.iter().map(|a| a[m1] * a[m2]).sum::<f64>())
                    .sum::<f64>()
            })
            .sum(),
    };
    total / (grid as f64).powi(d as i32)
}

/// Large-`n` limit of the normalized cyclic trace.
///
/// Starts from `grid` points per axis (or a default when 0), rounded up to a
/// multiple of every box size, and doubles until the relative change drops
/// below `1e-4`. The integrand is smooth and periodic, so this converges fast
/// whenever `f` has no zero on the continuum.
pub fn asymptotic_trace(scales: &[usize], d: usize, grid: usize) -> Result<f64> {
    if scales.is_empty() || scales.contains(&0) {
        return Err(Error::InvalidArgument("box sizes must be positive".into()));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidArgument(format!("dimension {d} not supported")));
    }
    if has_continuum_zero(scales, d) {
        return Err(Error::NonInvertible {
            frequency: None,
            detail: format!("box sizes {scales:?} share blind frequencies; the limit is infinite"),
        });
    }
    let lcm = scales.iter().fold(1usize, |a, &k| a.lcm(&k));
    let start = grid.max(64);
    let mut g = start.div_ceil(lcm) * lcm;
    let budget: usize = if d == 1 { 1 << 26 } else { 1 << 25 };
    let mut prev = quadrature_trace(scales, d, g);
    loop {
        g *= 2;
        if g.pow(d as u32) > budget {
            return Err(Error::Inconsistent(format!(
                "quadrature for {scales:?} did not settle within {budget} points"
            )));
        }
        let next = quadrature_trace(scales, d, g);
        if ((next - prev) / next).abs() < 1e-4 {
            return Ok(next);
        }
        prev = next;
    }
}

/// Sampled continuum minimum `M` of the stacked profile and the implied
/// condition-number bound `sqrt(s) / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumMinimum {
    pub value: f64,
    pub at: Vec<f64>,
    pub kappa_bound: f64,
}

fn profile_at(scales: &[usize], omega: &[f64]) -> f64 {
    scales
        .iter()
        .map(|&k| omega.iter().map(|&w| sinc_unchecked(k, w).powi(2)).product::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Minimum of `f` over `[0, 2π]^d` from `samples` points per axis, refined by
/// golden-section search around the best few samples (1-D only).
///
/// This is an estimate, not a certified global minimum.
pub fn continuum_minimum(scales: &[usize], d: usize, samples: usize) -> Result<ContinuumMinimum> {
    if samples < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    let h = TAU / samples as f64;
    let (value, at) = match d {
        1 => {
            let vals: Vec<f64> = (0..samples).map(|i| profile_at(scales, &[i as f64 * h])).collect();
            let mut candidates: Vec<usize> = (0..samples)
                .filter(|&i| {
                    let l = vals[(i + samples - 1) % samples];
                    let r = vals[(i + 1) % samples];
                    vals[i] <= l && vals[i] <= r
                })
                .collect();
            candidates.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            candidates.truncate(8);
            candidates
                .into_iter()
                .map(|i| {
                    let c = i as f64 * h;
                    golden_min(|w| profile_at(scales, &[w]), c - h, c + h)
                })
                .fold((f64::INFINITY, vec![0.0]), |best, (v, w)| {
                    if v < best.0 {
                        (v, vec![w.rem_euclid(TAU)])
                    } else {
                        best
                    }
                })
        }
        2 => {
            let mut best = (f64::INFINITY, vec![0.0, 0.0]);
            for i in 0..samples {
                for j in 0..samples {
                    let w = [i as f64 * h, j as f64 * h];
                    let v = profile_at(scales, &w);
                    if v < best.0 {
                        best = (v, w.to_vec());
                    }
                }
            }
            best
        }
        _ => return Err(Error::InvalidArgument(format!("dimension {d} not supported"))),
    };
    Ok(ContinuumMinimum {
        value,
        at,
        kappa_bound: (scales.len() as f64).sqrt() / value,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (fc, c)
    } else {
        (fd, d)
    }
}

/// Normalized trace of the explicit valid-convolution operator (mean
/// normalization), for dense-feasible sizes.
pub fn valid_mode_trace(scales: &[usize], n: usize, d: usize) -> Result<f64> {
    let t = stack_matrix(scales, ConvMode::Valid, Normalization::Mean, &vec![n; d])?;
    let eig = SymmetricEigen::new(t.tr_mul(&t));
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if lmin <= t.ncols() as f64 * f64::EPSILON * lmax {
        return Err(Error::NonInvertible {
            frequency: None,
            detail: format!("valid operator for {scales:?} at n={n} is not injective"),
        });
    }
    Ok(eig.eigenvalues.iter().map(|l| 1.0 / l).sum::<f64>() / t.ncols() as f64)
}
