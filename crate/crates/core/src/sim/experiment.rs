use std::time::Instant;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{stack_matrix, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::fft::forward_real;
use crate::recon::{fourier_reconstruct, reconstruct, Method, ReconstructionConfig};
use crate::signal::{add_noise_with_rng, forward_stack, ConvMode, GridSignal, Normalization};
use crate::spectral::{
    asymptotic_trace, condition_number, cyclic_trace, pairwise_coprime, stacked_profile_with,
    valid_mode_trace,
};

/// Generator for Monte-Carlo trial `trial`: one ChaCha8 key per `seed`, one
/// stream per trial, so trials are independent of scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scales: Vec<usize>,
    pub mode: ConvMode,
    pub normalization: Normalization,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub reconstruction: ReconstructionConfig,
}

impl ExperimentConfig {
    pub fn new(scales: &[usize], mode: ConvMode, sigma: f64, trials: usize, seed: u64) -> Self {
        let method = if mode == ConvMode::Cyclic { Method::Fourier } else { Method::Lsqr };
        ExperimentConfig {
            scales: scales.to_vec(),
            mode,
            normalization: Normalization::Mean,
            sigma,
            trials,
            seed,
            reconstruction: ReconstructionConfig::new(method, 0.0),
        }
    }
}

/// Closed-form least-squares error statistics (per unit noise variance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub trace_normalized: f64,
    pub rmse_factor: f64,
    /// Acceptance interval for `empirical / predicted` RMSE.
    pub ratio_band: (f64, f64),
    pub band_rule: String,
}

const BAND_RULE: &str = "1 ± 3·(1/2)·sqrt(2·Σg²/T)/Σg, g = eigenvalues of (T'T)⁻¹";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub shape: Vec<usize>,
    pub predicted: Option<Prediction>,
    /// `sqrt(mean over trials and pixels of (û − u)²)`.
    pub empirical_rmse: f64,
    /// `empirical_rmse / σ`; zero when `σ = 0`.
    pub empirical_rmse_factor: f64,
    pub ratio: Option<f64>,
    pub within_band: Option<bool>,
    /// Largest `|mean(û) − u|` in units of the predicted standard error of
    /// the trial mean; large values indicate bias.
    pub bias_z_max: Option<f64>,
    /// Noise-free run that reproduced the target to round-off.
    pub exact: bool,
    pub per_trial_rmse: Vec<f64>,
    pub wall_ms: f64,
}

/// Per-unit-variance error moments of the least-squares estimator.
struct Moments {
    /// Eigenvalues of `(T'T)⁻¹`.
    inverse_gram: Vec<f64>,
    /// Diagonal of `(T'T)⁻¹`.
    pixel_var: Vec<f64>,
}

fn error_moments(
    scales: &[usize],
    mode: ConvMode,
    normalization: Normalization,
    shape: &[usize],
) -> Result<Option<Moments>> {
    let square = shape.iter().all(|&s| s == shape[0]);
    if mode == ConvMode::Cyclic && square {
        let p = stacked_profile_with(scales, shape[0], shape.len(), normalization)?;
        if p.first_zero().is_some() {
            return Ok(None);
        }
        let inverse_gram: Vec<f64> = p.sigma_values.iter().map(|f| 1.0 / (f * f)).collect();
        let mean = inverse_gram.iter().sum::<f64>() / inverse_gram.len() as f64;
        // Circulant: every pixel has the same variance.
        let pixel_var = vec![mean; inverse_gram.len()];
        return Ok(Some(Moments { inverse_gram, pixel_var }));
    }
    if shape.iter().product::<usize>() > DENSE_LIMIT {
        return Ok(None);
    }
    let t = stack_matrix(scales, mode, normalization, shape)?;
    let eig = SymmetricEigen::new(t.tr_mul(&t));
    let lmax = eig.eigenvalues.max();
    if eig.eigenvalues.min() <= t.ncols() as f64 * f64::EPSILON * lmax {
        return Ok(None);
    }
    let inverse_gram: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l).collect();
    let v = &eig.eigenvectors;
    let pixel_var = (0..v.nrows())
        .map(|i| (0..v.ncols()).map(|j| v[(i, j)].powi(2) * inverse_gram[j]).sum())
        .collect();
    Ok(Some(Moments { inverse_gram, pixel_var }))
}

fn window(u: &GridSignal, origin: &[usize], shape: &[usize]) -> Result<GridSignal> {
    if origin.iter().all(|&o| o == 0) && shape == u.shape() {
        return Ok(u.clone());
    }
    match (u.shape(), shape) {
        ([_], [n]) => GridSignal::from_1d(u.values()[origin[0]..origin[0] + n].to_vec()),
        ([_, c], [rows, cols]) => GridSignal::from_fn_2d(*rows, *cols, |i, j| {
            u.values()[(origin[0] + i) * c + origin[1] + j]
        }),
        _ => Err(Error::InvalidShape("window dimension mismatch".into())),
    }
}

/// Trials are processed in fixed-size parallel chunks and reduced in trial
/// order, so reports are bit-identical for a given seed.
const CHUNK: usize = 32;

/// Monte-Carlo noise experiment: measure `u`, add noise, reconstruct, and
/// compare the empirical RMSE against the closed-form prediction.
pub fn run_noise_experiment(u: &GridSignal, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {} must be >= 0", cfg.sigma)));
    }
    cfg.reconstruction.validate()?;
    let start = Instant::now();
    let clean = forward_stack(u, &cfg.scales, cfg.mode, cfg.normalization)?;

    let run_trial = |t: usize| -> Result<(f64, Vec<usize>, GridSignal)> {
        let mut rng = trial_rng(cfg.seed, t);
        let noisy = add_noise_with_rng(&clean, cfg.sigma, &mut rng)?;
        let rec = reconstruct(&noisy, &cfg.reconstruction)?;
        let truth = window(u, &rec.origin, rec.signal.shape())?;
        let mse = rec.signal.sub(&truth)?.norm_sq() / truth.len() as f64;
        Ok((mse, rec.origin, rec.signal))
    };

    let mut per_trial_mse = Vec::with_capacity(cfg.trials);
    let mut sum: Option<(Vec<usize>, GridSignal)> = None;
    let mut first = 0;
    while first < cfg.trials {
        let last = (first + CHUNK).min(cfg.trials);
        let chunk: Vec<_> = (first..last).into_par_iter().map(run_trial).collect::<Result<_>>()?;
        for (mse, origin, signal) in chunk {
            per_trial_mse.push(mse);
            sum = Some(match sum {
                None => (origin, signal),
                Some((o, acc)) => (o, acc.add(&signal)?),
            });
        }
        first = last;
    }
    let (origin, sum) = sum.expect("at least one trial");

    let t = cfg.trials as f64;
    let mse = per_trial_mse.iter().sum::<f64>() / t;
    let empirical_rmse = mse.sqrt();
    let least_squares = cfg.reconstruction.method != Method::Local;
    let moments = if least_squares {
        error_moments(&cfg.scales, cfg.mode, cfg.normalization, u.shape())?
    } else {
        None
    };
    let predicted = moments.as_ref().map(|m| {
        let total: f64 = m.inverse_gram.iter().sum();
        let total_sq: f64 = m.inverse_gram.iter().map(|g| g * g).sum();
        let rel_sd = 0.5 * (2.0 * total_sq / t).sqrt() / total;
        let trace_normalized = total / m.inverse_gram.len() as f64;
        Prediction {
            trace_normalized,
            rmse_factor: trace_normalized.sqrt(),
            ratio_band: (1.0 - 3.0 * rel_sd, 1.0 + 3.0 * rel_sd),
            band_rule: BAND_RULE.to_string(),
        }
    });
    let noisy = cfg.sigma > 0.0;
    let empirical_rmse_factor = if noisy { empirical_rmse / cfg.sigma } else { 0.0 };
    let ratio = predicted
        .as_ref()
        .filter(|_| noisy)
        .map(|p| empirical_rmse_factor / p.rmse_factor);
    let within_band = ratio.zip(predicted.as_ref()).map(|(r, p)| r >= p.ratio_band.0 && r <= p.ratio_band.1);
    let bias_z_max = match (&moments, noisy) {
        (Some(m), true) if origin.iter().all(|&o| o == 0) => Some(
            sum.values()
                .iter()
                .zip(u.values())
                .zip(&m.pixel_var)
                .map(|((s, x), v)| (s / t - x).abs() / (cfg.sigma * (v / t).sqrt()))
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    let scale = u.max_abs().max(1.0);
    Ok(ExperimentReport {
        config: cfg.clone(),
        shape: u.shape().to_vec(),
        predicted,
        empirical_rmse,
        empirical_rmse_factor,
        ratio,
        within_band,
        bias_z_max,
        exact: !noisy && empirical_rmse <= 1e-9 * scale,
        per_trial_rmse: per_trial_mse.iter().map(|m| m.sqrt()).collect(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub scales: Vec<usize>,
    pub coprime: bool,
    /// `sqrt(tr((T'T)⁻¹)/N)`, `None` when the operator is singular.
    pub rmse_factor: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub n: usize,
    pub ndim: usize,
    pub mode: ConvMode,
    pub normalization: Normalization,
    pub cells: Vec<ScanCell>,
}

/// Predicted noise amplification for every pair `2 ≤ k1 < k2 ≤ k_max` (1-D)
/// or triple (2-D), up to `limit` cells.
pub fn coprime_scan(
    k_max: usize,
    n: usize,
    ndim: usize,
    mode: ConvMode,
    normalization: Normalization,
    limit: Option<usize>,
) -> Result<ScanTable> {
    let combos: Vec<Vec<usize>> = match ndim {
        1 => (2..=k_max)
            .flat_map(|a| (a + 1..=k_max).map(move |b| vec![a, b]))
            .collect(),
        2 => (2..=k_max)
            .flat_map(|a| {
                (a + 1..=k_max).flat_map(move |b| (b + 1..=k_max).map(move |c| vec![a, b, c]))
            })
            .collect(),
        _ => return Err(Error::InvalidArgument(format!("dimension {ndim} not supported"))),
    };
    let combos = &combos[..limit.unwrap_or(usize::MAX).min(combos.len())];
    let shape = vec![n; ndim];
    let cells = combos
        .par_iter()
        .map(|scales| -> Result<ScanCell> {
            let (rmse_factor, kappa) = if mode == ConvMode::Cyclic {
                let p = stacked_profile_with(scales, n, ndim, normalization)?;
                let kappa = condition_number(&p);
                let trace = (!kappa.infinite).then(|| {
                    p.sigma_values.iter().map(|f| 1.0 / (f * f)).sum::<f64>() / p.sigma_values.len() as f64
                });
                (trace.map(f64::sqrt), (!kappa.infinite).then_some(kappa.value))
            } else {
                let t = stack_matrix(scales, mode, normalization, &shape)?;
                let eig = SymmetricEigen::new(t.tr_mul(&t));
                let (lmin, lmax) = (eig.eigenvalues.min(), eig.eigenvalues.max());
                if lmin <= t.ncols() as f64 * f64::EPSILON * lmax {
                    (None, None)
                } else {
                    let tr = eig.eigenvalues.iter().map(|l| 1.0 / l).sum::<f64>() / t.ncols() as f64;
                    (Some(tr.sqrt()), Some((lmax / lmin).sqrt()))
                }
            };
            Ok(ScanCell {
                scales: scales.clone(),
                coprime: pairwise_coprime(scales),
                rmse_factor,
                kappa,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable {
        n,
        ndim,
        mode,
        normalization,
        cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCountConfig {
    /// Box sizes in the order they are added: `[k1]`, `[k1, k2]`, `[k1, k2, k3]`.
    pub scales: Vec<usize>,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Half-width in grid steps of the neighbourhood around each blind point
    /// shared by the first two boxes; `None` means `n / 64` (at least 1).
    pub blind_radius: Option<usize>,
}

impl Default for ScaleCountConfig {
    fn default() -> Self {
        ScaleCountConfig {
            scales: vec![9, 10, 11],
            sigma: 0.01,
            lambda: 1e-6,
            seed: 0,
            blind_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCountRow {
    pub scales: Vec<usize>,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCountReport {
    pub config: ScaleCountConfig,
    pub rows: Vec<ScaleCountRow>,
    pub strictly_decreasing: bool,
    pub blind_radius: usize,
    /// Share of grid frequencies inside the blind neighbourhoods.
    pub blind_area_fraction: f64,
    /// Share of residual spectral energy on the blind neighbourhoods with the
    /// first two boxes, and with all three.
    pub blind_energy_fraction_two: f64,
    pub blind_energy_fraction_three: f64,
    /// Reconstructions from one, two and three boxes.
    #[serde(skip)]
    pub reconstructions: Vec<GridSignal>,
}

/// Frequencies within `radius` steps (per axis, cyclically) of a point where
/// both of two coprime boxes are blind: `(p n / k1, q n / k2)` or the transpose.
pub fn blind_mask(k1: usize, k2: usize, n: usize, radius: usize) -> Vec<bool> {
    let near = |k: usize| -> Vec<bool> {
        (0..n)
            .map(|m| {
                (1..k).any(|p| {
                    let d = (m as f64 - (n * p) as f64 / k as f64).abs();
                    d.min(n as f64 - d) <= radius as f64
                })
            })
            .collect()
    };
    let (a, b) = (near(k1), near(k2));
    (0..n * n)
        .map(|i| {
            let (r, c) = (i / n, i % n);
            (a[r] && b[c]) || (b[r] && a[c])
        })
        .collect()
}

/// Cyclic mean-box reconstructions of a square 2-D target from one, two and
/// three boxes (one shared noise draw), with the spectral location of the
/// two-box residual.
pub fn scale_count_comparison(u: &GridSignal, cfg: &ScaleCountConfig) -> Result<ScaleCountReport> {
    let n = match u.shape() {
        [r, c] if r == c => *r,
        _ => return Err(Error::InvalidShape("a square 2-D target is required".into())),
    };
    if cfg.scales.len() != 3 {
        return Err(Error::InvalidArgument("exactly three box sizes are required".into()));
    }
    let radius = cfg.blind_radius.unwrap_or((n / 64).max(1));
    let clean = forward_stack(u, &cfg.scales, ConvMode::Cyclic, Normalization::Mean)?;
    let noisy = add_noise_with_rng(&clean, cfg.sigma, &mut trial_rng(cfg.seed, 0))?;

    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut reconstructions = Vec::new();
    for count in 1..=3 {
        let subset = noisy.subset(&cfg.scales[..count])?;
        let rec = fourier_reconstruct(&subset, cfg.lambda)?;
        let residual = rec.sub(u)?;
        rows.push(ScaleCountRow {
            scales: cfg.scales[..count].to_vec(),
            rmse: residual.rms(),
        });
        residuals.push(residual);
        reconstructions.push(rec);
    }
    let mask = blind_mask(cfg.scales[0], cfg.scales[1], n, radius);
    let energy_fraction = |r: &GridSignal| {
        let spec: Vec<Complex64> = forward_real(r.values(), r.shape());
        let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        let inside: f64 = spec.iter().zip(&mask).filter(|(_, &m)| m).map(|(z, _)| z.norm_sqr()).sum();
        if total > 0.0 { inside / total } else { 0.0 }
    };
    Ok(ScaleCountReport {
        config: cfg.clone(),
        strictly_decreasing: rows.windows(2).all(|w| w[1].rmse < w[0].rmse),
        rows,
        blind_radius: radius,
        blind_area_fraction: mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64,
        blind_energy_fraction_two: energy_fraction(&residuals[1]),
        blind_energy_fraction_three: energy_fraction(&residuals[2]),
        reconstructions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    /// Normalized trace under cyclic convolution, `None` when singular.
    pub cyclic: Option<f64>,
    /// Normalized trace of the explicit valid operator, when dense-feasible
    /// and injective.
    pub valid: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSweep {
    pub scales: Vec<usize>,
    pub ndim: usize,
    pub asymptotic: Option<f64>,
    pub rows: Vec<TraceRow>,
}

/// Mean-normalized traces against grid size, with the large-`n` limit.
pub fn trace_convergence_sweep(scales: &[usize], ndim: usize, sizes: &[usize]) -> Result<TraceSweep> {
    let k_max = *scales
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("at least one box size is required".into()))?;
    let rows = sizes
        .iter()
        .map(|&n| {
            let cyclic = if n >= k_max { cyclic_trace(scales, n, ndim).ok() } else { None };
            let valid = if n >= k_max && n.pow(ndim as u32) <= DENSE_LIMIT {
                valid_mode_trace(scales, n, ndim).ok()
            } else {
                None
            };
            TraceRow { n, cyclic, valid }
        })
        .collect();
    Ok(TraceSweep {
        scales: scales.to_vec(),
        ndim,
        asymptotic: asymptotic_trace(scales, ndim, 0).ok(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{predicted_mse, stacked_profile};
    use rand::Rng;

    fn random_signal(n: usize, seed: u64) -> GridSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridSignal::from_1d((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn trial_streams_are_distinct_and_reproducible() {
        use rand::RngCore;
        let a = trial_rng(7, 0).next_u64();
        assert_eq!(a, trial_rng(7, 0).next_u64());
        assert_ne!(a, trial_rng(7, 1).next_u64());
        assert_ne!(a, trial_rng(8, 0).next_u64());
    }

    #[test]
    fn empirical_matches_prediction() {
        let u = random_signal(256, 1);
        let cfg = ExperimentConfig::new(&[5, 7], ConvMode::Cyclic, 0.1, 128, 3);
        let r = run_noise_experiment(&u, &cfg).unwrap();
        let p = r.predicted.as_ref().unwrap();
        let spectral = predicted_mse(&stacked_profile(&[5, 7], 256, 1).unwrap(), 0.1).unwrap();
        assert!((p.rmse_factor - spectral.rmse_factor).abs() < 1e-12);
        assert!(r.within_band.unwrap(), "ratio {:?} band {:?}", r.ratio, p.ratio_band);
        assert!(r.bias_z_max.unwrap() < 6.0);
    }

    #[test]
    fn dense_prediction_for_valid_mode() {
        let u = random_signal(60, 2);
        let mut cfg = ExperimentConfig::new(&[3, 4], ConvMode::Valid, 0.05, 200, 4);
        cfg.reconstruction = ReconstructionConfig::new(Method::Oracle, 0.0);
        let r = run_noise_experiment(&u, &cfg).unwrap();
        let p = r.predicted.as_ref().unwrap();
        let want = valid_mode_trace(&[3, 4], 60, 1).unwrap();
        assert!((p.trace_normalized - want).abs() < 1e-9 * want);
        assert!(r.within_band.unwrap(), "ratio {:?} band {:?}", r.ratio, p.ratio_band);
    }

    #[test]
    fn deterministic_across_runs() {
        let u = random_signal(128, 5);
        let cfg = ExperimentConfig::new(&[3, 5], ConvMode::Cyclic, 0.2, 70, 11);
        let a = run_noise_experiment(&u, &cfg).unwrap();
        let b = run_noise_experiment(&u, &cfg).unwrap();
        assert_eq!(a.per_trial_rmse, b.per_trial_rmse);
        assert_eq!(a.empirical_rmse.to_bits(), b.empirical_rmse.to_bits());
    }

    #[test]
    fn noiseless_is_exact() {
        let u = random_signal(64, 6);
        let cfg = ExperimentConfig::new(&[3, 5], ConvMode::Cyclic, 0.0, 2, 0);
        let r = run_noise_experiment(&u, &cfg).unwrap();
        assert!(r.exact);
        assert_eq!(r.empirical_rmse_factor, 0.0);
        assert!(r.ratio.is_none());
    }

    #[test]
    fn singular_design_has_no_prediction() {
        let u = random_signal(60, 7);
        let mut cfg = ExperimentConfig::new(&[2, 4], ConvMode::Cyclic, 0.1, 2, 0);
        cfg.reconstruction.lambda = 1e-3;
        let r = run_noise_experiment(&u, &cfg).unwrap();
        assert!(r.predicted.is_none());
    }

    #[test]
    fn local_errors_are_measured_on_the_recovered_window() {
        let u = random_signal(40, 8);
        let mut cfg = ExperimentConfig::new(&[3, 5], ConvMode::Valid, 0.0, 1, 0);
        cfg.normalization = Normalization::Unit;
        cfg.reconstruction = ReconstructionConfig::new(Method::Local, 0.0);
        let r = run_noise_experiment(&u, &cfg).unwrap();
        assert!(r.exact);
        assert!(r.predicted.is_none());
    }

    #[test]
    fn scan_flags_shared_factors() {
        let t = coprime_scan(8, 840, 1, ConvMode::Cyclic, Normalization::Mean, None).unwrap();
        assert_eq!(t.cells.len(), 21);
        for c in &t.cells {
            // 840 is divisible by every shared factor of sizes up to 8.
            assert_eq!(c.rmse_factor.is_some(), c.coprime, "{:?}", c.scales);
        }
        let two_d = coprime_scan(7, 30, 2, ConvMode::Cyclic, Normalization::Mean, Some(5)).unwrap();
        assert_eq!(two_d.cells.len(), 5);
        assert_eq!(two_d.cells[0].scales, vec![2, 3, 4]);
    }

    #[test]
    fn valid_scan_matches_census() {
        let t = coprime_scan(6, 20, 1, ConvMode::Valid, Normalization::Unit, None).unwrap();
        for c in &t.cells {
            assert_eq!(c.rmse_factor.is_some(), c.coprime, "{:?}", c.scales);
        }
    }

    #[test]
    fn blind_mask_geometry() {
        let m = blind_mask(2, 3, 12, 0);
        // Blind points (6, 4), (6, 8), (4, 6), (8, 6).
        let on: Vec<usize> = (0..144).filter(|&i| m[i]).collect();
        assert_eq!(on, vec![4 * 12 + 6, 6 * 12 + 4, 6 * 12 + 8, 8 * 12 + 6]);
    }

    #[test]
    fn trace_sweep_rows() {
        let s = trace_convergence_sweep(&[3, 4], 1, &[3, 20, 5000]).unwrap();
        assert!(s.rows[0].valid.is_none() || s.rows[0].valid.unwrap() > 0.0);
        assert!(s.rows[1].valid.unwrap() >= s.rows[1].cyclic.unwrap() * 0.5);
        assert!(s.rows[2].valid.is_none());
        let lim = s.asymptotic.unwrap();
        assert!((s.rows[2].cyclic.unwrap() - lim).abs() / lim < 0.01);
    }
}
