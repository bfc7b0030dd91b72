use num_complex::Complex64;

use super::{require_mode, PadPolicy};
use crate::error::{Error, Result};
use crate::fft::{forward_real, inverse_real};
use crate::signal::{ConvMode, GridSignal, MeasurementSet, Normalization};
use crate::spectral::box_dft;

/// DFT multiplier of the cyclic window-sum map at size `k`:
/// `Z(ω) = H(ω) U(ω)` with `H = gain · conj(b̂_k)`.
fn forward_multiplier(k: usize, shape: &[usize], normalization: Normalization) -> Result<Vec<Complex64>> {
    let d = shape.len();
    let gain = (k as f64).powi(d as i32) / normalization.divisor(k, d);
    let axes = shape
        .iter()
        .map(|&n| box_dft(k, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(match axes.as_slice() {
        [a] => a.iter().map(|b| gain * b.conj()).collect(),
        [a, b] => a
            .iter()
            .flat_map(|x| b.iter().map(move |y| gain * (x * y).conj()))
            .collect(),
        _ => return Err(Error::InvalidShape(format!("{shape:?}"))),
    })
}

/// `conj(H_j) / (λ + Σ|H|²)` for every scale, or the first frequency where
/// the denominator vanishes.
fn filter_spectra(
    scales: &[usize],
    shape: &[usize],
    lambda: f64,
    normalization: Normalization,
) -> Result<Vec<Vec<Complex64>>> {
    let hs = scales
        .iter()
        .map(|&k| forward_multiplier(k, shape, normalization))
        .collect::<Result<Vec<_>>>()?;
    let len: usize = shape.iter().product();
    let mut denom = vec![lambda; len];
    for h in &hs {
        for (d, v) in denom.iter_mut().zip(h) {
            *d += v.norm_sqr();
        }
    }
    if let Some(i) = denom.iter().position(|&d| d == 0.0) {
        let freq = match shape {
            [_] => vec![i],
            _ => vec![i / shape[1], i % shape[1]],
        };
        return Err(Error::NonInvertible {
            detail: format!(
                "box sizes {scales:?} are all blind at frequency index {freq:?} on grid {shape:?}"
            ),
            frequency: Some(freq),
        });
    }
    Ok(hs
        .into_iter()
        .map(|h| h.iter().zip(&denom).map(|(v, d)| v.conj() / d).collect())
        .collect())
}

/// Closed-form Tikhonov least squares for cyclic measurements:
/// `Û = Σ_j conj(H_j) Z_j / (λ + Σ_j |H_j|²)` per frequency.
pub fn fourier_reconstruct(ms: &MeasurementSet, lambda: f64) -> Result<GridSignal> {
    require_mode(ms, &[ConvMode::Cyclic], "the Fourier solver")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
    }
    let shape = ms.source_shape();
    let filters = filter_spectra(ms.scales(), shape, lambda, ms.normalization())?;
    let mut acc = vec![Complex64::default(); shape.iter().product()];
    for (g, z) in filters.iter().zip(ms.data()) {
        let zf = forward_real(z.values(), shape);
        for ((a, gv), zv) in acc.iter_mut().zip(g).zip(zf) {
            *a += gv * zv;
        }
    }
    GridSignal::new(shape.to_vec(), inverse_real(acc, shape))
}

/// [`fourier_reconstruct`] for any mode.
///
/// Full-mode data is embedded exactly in a cyclic problem on a grid enlarged
/// by `max k − 1` per axis and the result cropped. Valid-mode data is padded
/// to the source length according to `pad`, which is only an approximation.
pub fn fourier_reconstruct_padded(ms: &MeasurementSet, lambda: f64, pad: PadPolicy) -> Result<GridSignal> {
    match ms.mode() {
        ConvMode::Cyclic => fourier_reconstruct(ms, lambda),
        ConvMode::Valid => {
            if pad == PadPolicy::Reject {
                return Err(Error::InvalidArgument(
                    "the Fourier solver needs cyclic data; choose a zero or reflect pad policy for valid data"
                        .into(),
                ));
            }
            let shape = ms.source_shape().to_vec();
            let data = ms
                .scales()
                .iter()
                .zip(ms.data())
                .map(|(_, z)| {
                    let mut out = z.clone();
                    for axis in 0..shape.len() {
                        let len = out.shape()[axis];
                        out = remap_axis(&out, axis, shape[axis], |b| match pad {
                            PadPolicy::Zero => (b < len).then_some(b),
                            _ => Some(reflect(b, len)),
                        });
                    }
                    out
                })
                .collect();
            let cyclic = MeasurementSet::new(
                ms.scales().to_vec(),
                data,
                ConvMode::Cyclic,
                ms.normalization(),
                ms.sigma(),
                shape,
            )?;
            fourier_reconstruct(&cyclic, lambda)
        }
        ConvMode::Full => {
            let kmax = *ms.scales().last().expect("measurement sets are non-empty");
            let shape = ms.source_shape().to_vec();
            let big: Vec<usize> = shape.iter().map(|&n| n + kmax - 1).collect();
            let data = ms
                .scales()
                .iter()
                .zip(ms.data())
                .map(|(&k, z)| {
                    let mut out = z.clone();
                    for axis in 0..shape.len() {
                        let (n, nb) = (shape[axis], big[axis]);
                        out = remap_axis(&out, axis, nb, |b| {
                            // Cyclic window starting at b is the full window ending at b + k - 1.
                            let b = if b + k > nb { b as isize - nb as isize } else { b as isize };
                            let a = b + k as isize - 1;
                            (0..(n + k - 1) as isize).contains(&a).then_some(a as usize)
                        });
                    }
                    out
                })
                .collect();
            let cyclic = MeasurementSet::new(
                ms.scales().to_vec(),
                data,
                ConvMode::Cyclic,
                ms.normalization(),
                ms.sigma(),
                big.clone(),
            )?;
            let u = fourier_reconstruct(&cyclic, lambda)?;
            crop(&u, &shape)
        }
    }
}

fn reflect(b: usize, len: usize) -> usize {
    // Symmetric extension: ..., z[len-2], z[len-1] | z[len-1], z[len-2], ...
    let period = 2 * len;
    let r = b % period;
    if r < len {
        r
    } else {
        period - 1 - r
    }
}

/// New signal whose `axis` has length `new_len`, sampling the old axis at
/// `source(b)` (or zero when `None`).
fn remap_axis(z: &GridSignal, axis: usize, new_len: usize, source: impl Fn(usize) -> Option<usize>) -> GridSignal {
    let mut shape = z.shape().to_vec();
    let old = shape.clone();
    shape[axis] = new_len;
    let map: Vec<Option<usize>> = (0..new_len).map(&source).collect();
    let values = match old.as_slice() {
        [_] => map.iter().map(|s| s.map_or(0.0, |i| z.values()[i])).collect(),
        [rows, cols] => {
            let (rows2, cols2) = (shape[0], shape[1]);
            let mut v = vec![0.0; rows2 * cols2];
            for r in 0..rows2 {
                for c in 0..cols2 {
                    let src = if axis == 0 {
                        map[r].map(|rr| rr * cols + c)
                    } else {
                        map[c].map(|cc| r * cols + cc)
                    };
                    if let Some(i) = src {
                        debug_assert!(i < rows * cols);
                        v[r * cols2 + c] = z.values()[i];
                    }
                }
            }
            v
        }
        _ => unreachable!(),
    };
    GridSignal::new(shape, values).expect("remapped shape is consistent")
}

fn crop(u: &GridSignal, shape: &[usize]) -> Result<GridSignal> {
    match (u.shape(), shape) {
        ([_], [n]) => GridSignal::from_1d(u.values()[..*n].to_vec()),
        ([_, cols], [r, c]) => GridSignal::from_fn_2d(*r, *c, |i, j| u.values()[i * cols + j]),
        _ => Err(Error::InvalidShape(format!("cannot crop {:?} to {shape:?}", u.shape()))),
    }
}

/// Spatial filters `h_j` with `û = Σ_j z_j ⊛ h_j` (cyclic convolution).
pub fn per_scale_filters(
    scales: &[usize],
    shape: &[usize],
    lambda: f64,
    normalization: Normalization,
) -> Result<Vec<GridSignal>> {
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    filter_spectra(&sorted, shape, lambda, normalization)?
        .into_iter()
        .map(|g| GridSignal::new(shape.to_vec(), inverse_real(g, shape)))
        .collect()
}

/// `Σ_j z_j ⊛ h_j` with filters from [`per_scale_filters`].
pub fn apply_filters(ms: &MeasurementSet, filters: &[GridSignal]) -> Result<GridSignal> {
    require_mode(ms, &[ConvMode::Cyclic], "per-scale filtering")?;
    if filters.len() != ms.data().len() {
        return Err(Error::Inconsistent(format!(
            "{} filters for {} measurements",
            filters.len(),
            ms.data().len()
        )));
    }
    let shape = ms.source_shape();
    let mut acc = vec![Complex64::default(); shape.iter().product()];
    for (h, z) in filters.iter().zip(ms.data()) {
        if h.shape() != shape {
            return Err(Error::Inconsistent(format!("filter shape {:?}", h.shape())));
        }
        let (hf, zf) = (forward_real(h.values(), shape), forward_real(z.values(), shape));
        for ((a, hv), zv) in acc.iter_mut().zip(hf).zip(zf) {
            *a += hv * zv;
        }
    }
    GridSignal::new(shape.to_vec(), inverse_real(acc, shape))
}
