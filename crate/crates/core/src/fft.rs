//! Thin n-dimensional wrappers over `rustfft`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalised DFT over a row-major 1-D or 2-D array.
///
/// The forward transform uses `exp(-2πi a m / n)`; the inverse is scaled by
/// `1/N` so that `inverse(forward(x)) == x`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    match shape {
        [n] => {
            let plan = if inverse {
                planner.plan_fft_inverse(*n)
            } else {
                planner.plan_fft_forward(*n)
            };
            plan.process(data);
        }
        [rows, cols] => {
            let (rows, cols) = (*rows, *cols);
            let row_plan = if inverse {
                planner.plan_fft_inverse(cols)
            } else {
                planner.plan_fft_forward(cols)
            };
            row_plan.process(data);
            let col_plan = if inverse {
                planner.plan_fft_inverse(rows)
            } else {
                planner.plan_fft_forward(rows)
            };
            let mut column = vec![Complex64::default(); rows];
            for c in 0..cols {
                for r in 0..rows {
                    column[r] = data[r * cols + c];
                }
                col_plan.process(&mut column);
                for r in 0..rows {
                    data[r * cols + c] = column[r];
                }
            }
        }
        _ => panic!("only 1-D and 2-D transforms are supported"),
    }
    if inverse {
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn forward_real(values: &[f64], shape: &[usize]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, shape, false);
    buf
}

/// Inverse transform keeping the real part.
pub fn inverse_real(mut spectrum: Vec<Complex64>, shape: &[usize]) -> Vec<f64> {
    fft_nd(&mut spectrum, shape, true);
    spectrum.into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_1d(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(a, &v)| {
                        let th = -2.0 * std::f64::consts::PI * (a * m) as f64 / n as f64;
                        Complex64::from_polar(v, th)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<f64> = (0..7).map(|i| (i * i) as f64 - 3.0).collect();
        let got = forward_real(&x, &[7]);
        for (g, w) in got.iter().zip(naive_dft_1d(&x)) {
            assert!((g - w).norm() < 1e-10);
        }
    }

    #[test]
    fn two_d_round_trip() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let back = inverse_real(forward_real(&x, &[3, 4]), &[3, 4]);
        for (a, b) in x.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_d_is_separable() {
        // A rank-one array transforms into the outer product of 1-D transforms.
        let r = [1.0, -2.0, 0.5];
        let c = [3.0, 1.0, 0.0, 2.0];
        let x: Vec<f64> = r.iter().flat_map(|a| c.iter().map(move |b| a * b)).collect();
        let got = forward_real(&x, &[3, 4]);
        let (fr, fc) = (naive_dft_1d(&r), naive_dft_1d(&c));
        for i in 0..3 {
            for j in 0..4 {
                assert!((got[i * 4 + j] - fr[i] * fc[j]).norm() < 1e-10);
            }
        }
    }
}
