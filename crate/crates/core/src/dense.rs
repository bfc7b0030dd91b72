//! Explicit matrices for the stacked box operator.
//!
//! Built with direct loops over kernel windows, independently of the
//! summed-area-table path, so they double as a cross-check on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::signal::{ConvMode, Normalization};

/// Largest number of unknowns an explicit matrix may have.
pub const DENSE_LIMIT: usize = 4096;

/// Matrix of the stacked operator: one block of rows per scale (ascending),
/// rows and columns in row-major grid order.
pub fn stack_matrix(
    scales: &[usize],
    mode: ConvMode,
    normalization: Normalization,
    shape: &[usize],
) -> Result<DMatrix<f64>> {
    let cols: usize = shape.iter().product();
    if cols > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            columns: cols,
            limit: DENSE_LIMIT,
        });
    }
    if shape.is_empty() || shape.len() > 2 || cols == 0 {
        return Err(Error::InvalidShape(format!("{shape:?}")));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    let blocks = sorted
        .iter()
        .map(|&k| box_block(k, mode, normalization, shape))
        .collect::<Result<Vec<_>>>()?;
    let rows = blocks.iter().map(DMatrix::nrows).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.rows_mut(r0, b.nrows()).copy_from(&b);
        r0 += b.nrows();
    }
    Ok(out)
}

fn box_block(
    k: usize,
    mode: ConvMode,
    normalization: Normalization,
    shape: &[usize],
) -> Result<DMatrix<f64>> {
    let out_shape = mode.output_shape(shape, k)?;
    let weight = 1.0 / normalization.divisor(k, shape.len());
    // Per axis: for each output index, the source indices its window covers.
    let taps: Vec<Vec<Vec<usize>>> = shape
        .iter()
        .zip(&out_shape)
        .map(|(&n, &len)| {
            (0..len)
                .map(|a| {
                    let start = match mode {
                        ConvMode::Full => a as isize - (k as isize - 1),
                        ConvMode::Valid | ConvMode::Cyclic => a as isize,
                    };
                    (0..k as isize)
                        .filter_map(|o| {
                            let t = start + o;
                            match mode {
                                ConvMode::Cyclic => Some(t.rem_euclid(n as isize) as usize),
                                _ => (0..n as isize).contains(&t).then_some(t as usize),
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let cols: usize = shape.iter().product();
    let rows: usize = out_shape.iter().product();
    let mut m = DMatrix::zeros(rows, cols);
    match taps.as_slice() {
        [t0] => {
            for (a, src) in t0.iter().enumerate() {
                for &t in src {
                    m[(a, t)] += weight;
                }
            }
        }
        [t0, t1] => {
            let w = shape[1];
            for (a, rs) in t0.iter().enumerate() {
                for (b, cs) in t1.iter().enumerate() {
                    let row = a * out_shape[1] + b;
                    for &r in rs {
                        for &c in cs {
                            m[(row, r * w + c)] += weight;
                        }
                    }
                }
            }
        }
        _ => unreachable!("shape was checked to be 1-D or 2-D"),
    }
    Ok(m)
}

fn rank_tolerance(m: &DMatrix<f64>, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Numerical rank: singular values above `max(rows, cols) · eps · sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    let tol = rank_tolerance(m, smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Minimum-norm least-squares solution.
///
/// The rank comes from the singular values, but the solve uses the
/// eigenvectors of `M'M`: nalgebra's SVD returns accurate singular values yet
/// singular vectors off by up to 1e-5 when singular values cluster, as they
/// do for circulant blocks. Two corrected-seminormal steps restore full
/// accuracy lost by forming `M'M`.
pub fn min_norm_solve(m: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let rank = numerical_rank(m);
    let eig = SymmetricEigen::new(m.tr_mul(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let kept = &order[..rank];
    let pinv_normal = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut x = DVector::zeros(m.ncols());
        for &i in kept {
            let v = eig.eigenvectors.column(i);
            x.axpy(v.dot(rhs) / eig.eigenvalues[i], &v, 1.0);
        }
        x
    };
    let b = DVector::from_column_slice(b);
    let mut x = pinv_normal(&m.tr_mul(&b));
    for _ in 0..2 {
        let r = &b - m * &x;
        x += pinv_normal(&m.tr_mul(&r));
    }
    x.as_slice().to_vec()
}

/// Ridge solution `(M'M + lambda I)^{-1} M' b` for `lambda > 0`.
pub fn ridge_solve(m: &DMatrix<f64>, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = m.ncols();
    let normal = m.tr_mul(m) + DMatrix::identity(n, n) * lambda;
    let rhs = m.tr_mul(&DVector::from_column_slice(b));
    let chol = normal.cholesky().ok_or_else(|| Error::NonInvertible {
        frequency: None,
        detail: "regularised normal matrix is not positive definite".into(),
    })?;
    Ok(chol.solve(&rhs).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_box_two() {
        let m = stack_matrix(&[2], ConvMode::Valid, Normalization::Unit, &[4]).unwrap();
        let want = DMatrix::from_row_slice(3, 4, &[1., 1., 0., 0., 0., 1., 1., 0., 0., 0., 1., 1.]);
        assert_eq!(m, want);
    }

    #[test]
    fn cyclic_and_full_rows() {
        let c = stack_matrix(&[2], ConvMode::Cyclic, Normalization::Mean, &[3]).unwrap();
        assert_eq!(c.row(2).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, 0.5]);
        let f = stack_matrix(&[2], ConvMode::Full, Normalization::Unit, &[3]).unwrap();
        assert_eq!(f.nrows(), 4);
        assert_eq!(f.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rank_of_box_two_valid() {
        // Alternating signals are invisible to a valid 2-box.
        let m = stack_matrix(&[2], ConvMode::Valid, Normalization::Unit, &[6]).unwrap();
        assert_eq!(numerical_rank(&m), 5);
    }

    #[test]
    fn min_norm_is_orthogonal_to_nullspace() {
        let m = stack_matrix(&[2], ConvMode::Valid, Normalization::Unit, &[4]).unwrap();
        let x = min_norm_solve(&m, &[1.0, 1.0, 1.0]);
        let null = [1.0, -1.0, 1.0, -1.0];
        let dot: f64 = x.iter().zip(null).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        for xi in x {
            assert!((xi - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn min_norm_accurate_on_clustered_spectrum() {
        // Cyclic 2-D blocks have many repeated singular values.
        let m = stack_matrix(&[2, 3, 5], ConvMode::Cyclic, Normalization::Mean, &[6, 6]).unwrap();
        let b: Vec<f64> = (0..m.nrows()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let x = min_norm_solve(&m, &b);
        let normal = m.tr_mul(&m).cholesky().unwrap();
        let want = normal.solve(&m.tr_mul(&DVector::from_vec(b)));
        for (xi, wi) in x.iter().zip(want.iter()) {
            assert!((xi - wi).abs() < 1e-10, "{xi} vs {wi}");
        }
    }

    #[test]
    fn guard() {
        let r = stack_matrix(&[2], ConvMode::Cyclic, Normalization::Unit, &[65, 64]);
        assert!(matches!(r, Err(Error::DenseTooLarge { .. })));
    }
}
