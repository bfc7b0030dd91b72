use serde::{Deserialize, Serialize};

use super::ReconstructionConfig;
use crate::error::Result;
use crate::linop::{Damped, LinearOperator};
use crate::signal::{GridSignal, MeasurementSet, StackOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsqrStop {
    /// `b = 0`, so `x = 0` is exact.
    ZeroRhs,
    /// `‖r‖ ≤ tol (‖b‖ + ‖A‖ ‖x‖)`: the system is consistent to tolerance.
    Consistent,
    /// `‖A'r‖ ≤ tol ‖A‖ ‖r‖`: a least-squares solution to tolerance.
    LeastSquares,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LsqrResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub stop: LsqrStop,
    pub converged: bool,
    /// Estimate of `‖b − A x‖`.
    pub residual_norm: f64,
    /// Estimate of `‖A'(b − A x)‖`.
    pub normal_residual_norm: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Golub–Kahan bidiagonalisation least squares (LSQR) for `min ‖A x − b‖`,
/// starting from `x = 0` so rank-deficient problems converge to the
/// minimum-norm solution.
pub fn lsqr<A: LinearOperator + ?Sized>(a: &A, b: &[f64], tol: f64, max_iter: usize) -> LsqrResult {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m, "right-hand side length must equal the row count");
    let mut x = vec![0.0; n];
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    let bnorm = beta;
    let done = |x, iterations, stop, r, nr| LsqrResult {
        x,
        iterations,
        converged: stop != LsqrStop::IterationLimit,
        stop,
        residual_norm: r,
        normal_residual_norm: nr,
    };
    if beta == 0.0 {
        return done(x, 0, LsqrStop::ZeroRhs, 0.0, 0.0);
    }
    scale(&mut u, 1.0 / beta);
    let mut v = vec![0.0; n];
    a.apply_adjoint(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        // b is orthogonal to the range; x = 0 is a least-squares solution.
        return done(x, 0, LsqrStop::LeastSquares, bnorm, 0.0);
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();
    let mut phi_bar = beta;
    let mut rho_bar = alpha;
    let mut anorm_sq = alpha * alpha;
    let mut tmp_m = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];

    for it in 1..=max_iter {
        // Bidiagonalisation step.
        a.apply(&v, &mut tmp_m);
        for (ui, t) in u.iter_mut().zip(&tmp_m) {
            *ui = t - alpha * *ui;
        }
        beta = norm(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            a.apply_adjoint(&u, &mut tmp_n);
            for (vi, t) in v.iter_mut().zip(&tmp_n) {
                *vi = t - beta * *vi;
            }
            alpha = norm(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        } else {
            alpha = 0.0;
        }
        anorm_sq += alpha * alpha + beta * beta;

        // Plane rotation eliminating the subdiagonal.
        let rho = rho_bar.hypot(beta);
        let c = rho_bar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }

        let rnorm = phi_bar;
        let arnorm = phi_bar * alpha * c.abs();
        let anorm = anorm_sq.sqrt();
        let xnorm = norm(&x);
        if rnorm <= tol * (bnorm + anorm * xnorm) {
            return done(x, it, LsqrStop::Consistent, rnorm, arnorm);
        }
        if arnorm <= tol * anorm * rnorm || alpha == 0.0 {
            return done(x, it, LsqrStop::LeastSquares, rnorm, arnorm);
        }
        if it == max_iter {
            return done(x, it, LsqrStop::IterationLimit, rnorm, arnorm);
        }
    }
    let r = phi_bar;
    done(x, max_iter, LsqrStop::IterationLimit, r, f64::NAN)
}

/// Minimises `Σ_j ‖x ⊗ b_{k_j} − z_j‖² + λ‖x‖²` with LSQR over the fast
/// stacked operator. Non-convergence is flagged in the result, not an error.
pub fn lsqr_reconstruct(ms: &MeasurementSet, cfg: &ReconstructionConfig) -> Result<(GridSignal, LsqrResult)> {
    cfg.validate()?;
    let op = StackOperator::for_set(ms)?;
    let max_iter = cfg.max_iter.unwrap_or(10 * op.cols());
    let b = ms.flatten();
    let result = if cfg.lambda > 0.0 {
        let damped = Damped::new(&op, cfg.lambda);
        let mut rhs = b;
        rhs.resize(damped.rows(), 0.0);
        lsqr(&damped, &rhs, cfg.tol, max_iter)
    } else {
        lsqr(&op, &b, cfg.tol, max_iter)
    };
    let u = GridSignal::new(ms.source_shape().to_vec(), result.x.clone())?;
    Ok((u, result))
}
