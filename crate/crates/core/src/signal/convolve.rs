use super::integral::{axis_pieces, windowed_sums};
use super::{BoxKernel, ConvMode, GridSignal, IntegralImage, Normalization};
use crate::error::{Error, Result};

/// First source index of output window `a`.
fn window_start(mode: ConvMode, a: usize, k: usize) -> isize {
    match mode {
        ConvMode::Valid | ConvMode::Cyclic => a as isize,
        ConvMode::Full => a as isize - (k as isize - 1),
    }
}

fn check_kernel(signal: &GridSignal, kernel: &BoxKernel) -> Result<()> {
    if kernel.ndim != signal.ndim() {
        return Err(Error::InvalidArgument(format!(
            "{}-D kernel applied to a {}-D signal",
            kernel.ndim,
            signal.ndim()
        )));
    }
    if kernel.size == 0 {
        return Err(Error::InvalidArgument("box size must be at least 1".into()));
    }
    Ok(())
}

/// Box convolution through a summed-area table; cost is independent of `k`.
pub fn box_convolve(signal: &GridSignal, kernel: &BoxKernel, mode: ConvMode) -> Result<GridSignal> {
    check_kernel(signal, kernel)?;
    let table = IntegralImage::new(signal);
    convolve_from_table(&table, kernel, mode)
}

/// Box convolution of the signal behind `table`.
pub(crate) fn convolve_from_table(
    table: &IntegralImage,
    kernel: &BoxKernel,
    mode: ConvMode,
) -> Result<GridSignal> {
    let k = kernel.size;
    let shape = table.shape();
    let out_shape = mode.output_shape(shape, k)?;
    let axes: Vec<_> = shape
        .iter()
        .zip(&out_shape)
        .map(|(&n, &len)| {
            axis_pieces(len, n, k, mode == ConvMode::Cyclic, |a| {
                window_start(mode, a, k)
            })
        })
        .collect();
    let mut values = windowed_sums(table, &axes);
    let div = kernel.normalization.divisor(k, kernel.ndim);
    if div != 1.0 {
        values.iter_mut().for_each(|v| *v /= div);
    }
    GridSignal::new(out_shape, values)
}

/// One low-resolution capture: a sensor with `k`-wide pixels whose origin is
/// shifted by `offset` fine pixels.
///
/// Pixel `p` along an axis covers the same window as output `offset + p·k` of
/// the full measurement, so the capture is that measurement decimated by `k`.
/// Sums are taken directly over the fine pixels.
pub fn shifted_capture(
    highres: &GridSignal,
    kernel: &BoxKernel,
    mode: ConvMode,
    offset: &[usize],
) -> Result<GridSignal> {
    check_kernel(highres, kernel)?;
    let k = kernel.size;
    let shape = highres.shape();
    let out_shape = mode.output_shape(shape, k)?;
    if offset.len() != shape.len() || offset.iter().any(|&o| o >= k) {
        return Err(Error::InvalidArgument(format!(
            "capture offset {offset:?} must lie in [0, {k}) per axis"
        )));
    }
    let cap_shape: Vec<usize> = out_shape
        .iter()
        .zip(offset)
        .map(|(&len, &o)| if o < len { (len - o).div_ceil(k) } else { 0 })
        .collect();
    if cap_shape.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "capture offset {offset:?} has no pixels inside the measurement"
        )));
    }
    let sample = |idx: &[isize]| -> f64 {
        let mut flat = 0usize;
        for (&i, &n) in idx.iter().zip(shape) {
            let i = match mode {
                ConvMode::Cyclic => i.rem_euclid(n as isize) as usize,
                _ if i < 0 || i >= n as isize => return 0.0,
                _ => i as usize,
            };
            flat = flat * n + i;
        }
        highres.values()[flat]
    };
    let div = kernel.normalization.divisor(k, kernel.ndim);
    let mut values = Vec::with_capacity(cap_shape.iter().product());
    match cap_shape[..] {
        [p_len] => {
            for p in 0..p_len {
                let s = window_start(mode, offset[0] + p * k, k);
                let sum: f64 = (0..k as isize).map(|i| sample(&[s + i])).sum();
                values.push(sum / div);
            }
        }
        [pr, pc] => {
            for p in 0..pr {
                let s0 = window_start(mode, offset[0] + p * k, k);
                for q in 0..pc {
                    let s1 = window_start(mode, offset[1] + q * k, k);
                    let mut sum = 0.0;
                    for i in 0..k as isize {
                        for j in 0..k as isize {
                            sum += sample(&[s0 + i, s1 + j]);
                        }
                    }
                    values.push(sum / div);
                }
            }
        }
        _ => unreachable!(),
    }
    GridSignal::new(cap_shape, values)
}

/// Assembles the box convolution by interlacing the `k^d` shifted captures.
///
/// Produces the same values as [`box_convolve`]; with integer-valued inputs
/// the two agree bit for bit.
pub fn interlace_measure(
    highres: &GridSignal,
    kernel: &BoxKernel,
    mode: ConvMode,
) -> Result<GridSignal> {
    check_kernel(highres, kernel)?;
    let k = kernel.size;
    let out_shape = mode.output_shape(highres.shape(), k)?;
    let mut out = GridSignal::zeros(&out_shape)?;
    match out_shape[..] {
        [len] => {
            for o in 0..k.min(len) {
                let cap = shifted_capture(highres, kernel, mode, &[o])?;
                for (p, &v) in cap.values().iter().enumerate() {
                    out.values_mut()[o + p * k] = v;
                }
            }
        }
        [rows, cols] => {
            for o0 in 0..k.min(rows) {
                for o1 in 0..k.min(cols) {
                    let cap = shifted_capture(highres, kernel, mode, &[o0, o1])?;
                    let pc = cap.shape()[1];
                    for (i, &v) in cap.values().iter().enumerate() {
                        let (p, q) = (i / pc, i % pc);
                        out.values_mut()[(o0 + p * k) * cols + o1 + q * k] = v;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Coarsens a scale-`k` measurement to scale `m·k` by summing `m` adjacent,
/// non-overlapping windows along each axis: `y_mk(a) = Σ_i y_k(a + i·k)`.
pub fn aggregate_scale(
    y: &GridSignal,
    k: usize,
    m: usize,
    mode: ConvMode,
    normalization: Normalization,
) -> Result<GridSignal> {
    if m == 0 {
        return Err(Error::InvalidArgument("aggregation factor must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("box size must be at least 1".into()));
    }
    if m == 1 {
        return Ok(y.clone());
    }
    let big = m * k;
    let mut cur = y.clone();
    for axis in 0..y.ndim() {
        let len = cur.shape()[axis];
        let n = mode.source_len(len, k).ok_or_else(|| {
            Error::InvalidShape(format!("length {len} is not a {mode:?} measurement at scale {k}"))
        })?;
        let out_len = mode.output_len(n, big)?;
        cur = sum_along_axis(&cur, axis, out_len, |a, i| {
            let idx = match mode {
                ConvMode::Valid => (a + i * k) as isize,
                ConvMode::Cyclic => ((a + i * k) % n) as isize,
                ConvMode::Full => a as isize - (i * k) as isize,
            };
            (idx >= 0 && (idx as usize) < len).then_some(idx as usize)
        }, m)?;
    }
    if normalization == Normalization::Mean {
        let div = (m as f64).powi(y.ndim() as i32);
        cur.values_mut().iter_mut().for_each(|v| *v /= div);
    }
    Ok(cur)
}

fn sum_along_axis(
    y: &GridSignal,
    axis: usize,
    out_len: usize,
    index: impl Fn(usize, usize) -> Option<usize>,
    terms: usize,
) -> Result<GridSignal> {
    let shape = y.shape();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = out_len;
    let (outer, inner) = match (shape.len(), axis) {
        (1, 0) => (1, 1),
        (2, 0) => (1, shape[1]),
        (2, 1) => (shape[0], 1),
        _ => unreachable!(),
    };
    let len = shape[axis];
    let v = y.values();
    let mut out = vec![0.0; out_shape.iter().product()];
    for o in 0..outer {
        for a in 0..out_len {
            for j in 0..inner {
                let mut acc = 0.0;
                for i in 0..terms {
                    if let Some(src) = index(a, i) {
                        acc += v[(o * len + src) * inner + j];
                    }
                }
                out[(o * out_len + a) * inner + j] = acc;
            }
        }
    }
    GridSignal::new(out_shape, out)
}
