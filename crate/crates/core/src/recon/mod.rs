//! Reconstruction of the high-resolution signal from a [`MeasurementSet`].
//!
//! Four methods are provided:
//! - [`fourier_reconstruct`]: closed-form regularised least squares for cyclic data;
//! - [`lsqr_reconstruct`]: matrix-free LSQR against the fast box-sum operators, any mode;
//! - [`local_reconstruct_1d`] / [`local_reconstruct_2d`]: exact pixel-wise recovery
//!   from a handful of window sums at coprime sizes;
//! - [`dense_oracle`]: explicit-matrix minimum-norm least squares, for verification.

mod fourier;
mod local;
mod lsqr;
mod nullspace;
mod oracle;

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ConvMode, GridSignal, MeasurementSet, Normalization};

pub use fourier::{apply_filters, fourier_reconstruct, fourier_reconstruct_padded, per_scale_filters};
pub use local::{
    bezout_plan, crt_plan, local_reconstruct, local_reconstruct_1d, local_reconstruct_2d,
    BezoutPlan, CrtPlan, LocalRecovery,
};
pub use lsqr::{lsqr, lsqr_reconstruct, LsqrResult, LsqrStop};
pub use nullspace::{nullspace_pattern, nullspace_witness};
pub use oracle::{dense_oracle, dense_rank, RankReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Fourier,
    Lsqr,
    Local,
    Oracle,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(Method::Fourier),
            "lsqr" => Ok(Method::Lsqr),
            "local" => Ok(Method::Local),
            "oracle" | "dense" | "dense_oracle" => Ok(Method::Oracle),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// How the Fourier solver treats non-cyclic measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadPolicy {
    /// Refuse anything but cyclic data.
    #[default]
    Reject,
    /// Extend valid measurements with zeros to the source length (approximate).
    Zero,
    /// Extend valid measurements by mirror reflection (approximate).
    Reflect,
}

impl FromStr for PadPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reject" => Ok(PadPolicy::Reject),
            "zero" | "zero_pad" => Ok(PadPolicy::Zero),
            "reflect" | "reflect_pad" => Ok(PadPolicy::Reflect),
            _ => Err(Error::InvalidArgument(format!("unknown pad policy {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub method: Method,
    /// Tikhonov weight `λ ≥ 0`.
    pub lambda: f64,
    /// Iteration cap for LSQR; `None` means `10 · n^d`.
    pub max_iter: Option<usize>,
    pub tol: f64,
    pub pad_policy: PadPolicy,
    /// Recorded for provenance; the solvers themselves are deterministic.
    pub seed: Option<u64>,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            method: Method::Fourier,
            lambda: 0.0,
            max_iter: None,
            tol: 1e-10,
            pad_policy: PadPolicy::Reject,
            seed: None,
        }
    }
}

impl ReconstructionConfig {
    pub fn new(method: Method, lambda: f64) -> Self {
        ReconstructionConfig {
            method,
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol {} must be > 0", self.tol)));
        }
        if self.method == Method::Local && self.lambda != 0.0 {
            return Err(Error::InvalidArgument("local reconstruction takes no regularisation".into()));
        }
        Ok(())
    }
}

/// A reconstruction together with solver diagnostics.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub signal: GridSignal,
    /// Offset of `signal` within the source grid (non-zero only for interior
    /// local recoveries).
    pub origin: Vec<usize>,
    pub report: SolverReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: Method,
    pub iterations: usize,
    /// `sqrt(Σ_j ‖T_j û − z_j‖²)` over the measurements.
    pub residual: f64,
    pub wall_ms: f64,
    pub converged: bool,
}

/// Runs the configured method and reports its residual and timing.
pub fn reconstruct(ms: &MeasurementSet, cfg: &ReconstructionConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let start = Instant::now();
    let (signal, origin, iterations, converged) = match cfg.method {
        Method::Fourier => (
            fourier_reconstruct_padded(ms, cfg.lambda, cfg.pad_policy)?,
            vec![0; ms.ndim()],
            0,
            true,
        ),
        Method::Lsqr => {
            let (u, r) = lsqr_reconstruct(ms, cfg)?;
            (u, vec![0; ms.ndim()], r.iterations, r.converged)
        }
        Method::Local => {
            let rec = local_reconstruct(ms)?;
            (rec.signal, rec.origin, 0, true)
        }
        Method::Oracle => (dense_oracle(ms, cfg.lambda)?, vec![0; ms.ndim()], 0, true),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let residual = if signal.shape() == ms.source_shape() {
        measurement_residual(ms, &signal)?
    } else {
        f64::NAN
    };
    Ok(Reconstruction {
        signal,
        origin,
        report: SolverReport {
            method: cfg.method,
            iterations,
            residual,
            wall_ms,
            converged,
        },
    })
}

/// `sqrt(Σ_j ‖T_j u − z_j‖²)`.
pub fn measurement_residual(ms: &MeasurementSet, u: &GridSignal) -> Result<f64> {
    let predicted = crate::signal::forward_stack(u, ms.scales(), ms.mode(), ms.normalization())?;
    Ok(predicted
        .data()
        .iter()
        .zip(ms.data())
        .map(|(p, z)| p.sub(z).map(|d| d.norm_sq()))
        .sum::<Result<f64>>()?
        .sqrt())
}

pub(crate) fn require_mode(ms: &MeasurementSet, allowed: &[ConvMode], what: &str) -> Result<()> {
    if allowed.contains(&ms.mode()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} does not support {:?} measurements",
            ms.mode()
        )))
    }
}

pub(crate) fn unit_data(ms: &MeasurementSet) -> MeasurementSet {
    ms.renormalized(Normalization::Unit)
}
