use std::fs;
use std::io::Write;
use std::path::Path;

use msr_core::io::{self, ArtifactKind, Manifest, Provenance};
use msr_core::recon::{self, dense_oracle, dense_rank};
use msr_core::signal::{add_noise, add_noise_with_rng, forward_stack};
use msr_core::sim::{self, ExperimentConfig, ScaleCountConfig};
use msr_core::spectral::{
    self, asymptotic_trace, condition_number, has_continuum_zero, pairwise_coprime,
    predicted_mse, stacked_profile_with,
};
use msr_core::{GridSignal, ReconstructionConfig, TargetKind, TargetSpec};
use serde_json::json;

use crate::args::{
    AnalyzeArgs, ExperimentCommand, Format, MeasureArgs, NoiseArgs, OracleArgs, ReconstructArgs,
    ScaleCountArgs, ScanArgs, SynthArgs, TargetArgs, TraceArgs, UnitArgs,
};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn command_line() -> Vec<String> {
    std::env::args().collect()
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(std::io::stdout().lock(), "{text}")?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// `None` for non-finite values, which JSON cannot carry.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl TargetArgs {
    fn spec(&self) -> TargetSpec {
        let d = self.d.unwrap_or(if self.kind == TargetKind::Grating { 1 } else { 2 });
        let mut spec = TargetSpec::new(self.kind, &vec![self.n; d]);
        spec.growth = self.growth;
        spec.sectors = self.sectors;
        spec.period = self.period;
        spec.seed = self.target_seed;
        spec.low = self.low;
        spec.high = self.high;
        spec.path = self.path.clone();
        spec
    }
}

/// Writes a signal, choosing P5 over P2 for `.pgm` paths when `binary` is set.
fn save_signal(path: &Path, signal: &GridSignal, binary: bool) -> Result<()> {
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        io::write_pgm(path, signal, binary)?;
    } else {
        io::write_signal(path, signal)?;
    }
    Ok(())
}

/// Snapshot file name for a signal: PGM images in 2-D, CSV otherwise.
fn snapshot_name(stem: &str, signal: &GridSignal) -> String {
    if signal.ndim() == 2 {
        format!("{stem}.pgm")
    } else {
        format!("{stem}.csv")
    }
}

impl UnitArgs {
    /// Box widths in micrometres, or `null` when no pitch was given.
    fn describe(&self, scales: &[usize]) -> serde_json::Value {
        match self.pixel_um {
            Some(p) => json!({
                "pixel_um": p,
                "box_um": scales.iter().map(|&k| k as f64 * p).collect::<Vec<_>>(),
            }),
            None => serde_json::Value::Null,
        }
    }
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let spec = args.target.spec();
    let signal = sim::make_target(&spec)?;
    let format = args
        .format
        .unwrap_or(if signal.ndim() == 1 { Format::Csv } else { Format::Pgm });
    let file = match format {
        Format::Csv => "target.csv",
        Format::Pgm => "target.pgm",
    };
    fs::create_dir_all(&args.out)?;
    save_signal(&args.out.join(file), &signal, args.binary)?;
    let provenance = Provenance::now(command_line(), Some(spec.seed), serde_json::to_value(&spec)?);
    let mut manifest = Manifest::new(ArtifactKind::Target, provenance);
    manifest.add_payload(&args.out, "target", file, None, signal.shape())?;
    let path = manifest.write(&args.out)?;
    writeln!(std::io::stdout().lock(), "{}", path.display())?;
    Ok(())
}

pub fn measure(args: MeasureArgs) -> Result<()> {
    let (target, source) = io::load_target(&args.target)?;
    let clean = forward_stack(&target, &args.scales, args.mode, args.normalization)?;
    let ms = add_noise(&clean, args.sigma, args.seed)?;
    let details = json!({
        "target": args.target,
        "target_manifest": source.map(|m| m.provenance),
    });
    let provenance = Provenance::now(command_line(), Some(args.seed), details);
    io::save_measurements(&args.out, &ms, provenance)?;
    writeln!(std::io::stdout().lock(), "{}", args.out.join(io::MANIFEST_NAME).display())?;
    Ok(())
}

pub fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let (ms, _) = io::load_measurements(&args.input)?;
    if let Some(mode) = args.mode {
        if mode != ms.mode() {
            return Err(CliError::Usage(format!(
                "--mode {mode:?} does not match the measurement set's {:?}",
                ms.mode()
            )));
        }
    }
    let mut cfg = ReconstructionConfig::new(args.method, args.lambda);
    cfg.tol = args.tol;
    cfg.max_iter = args.max_iter;
    cfg.pad_policy = args.pad;
    let rec = recon::reconstruct(&ms, &cfg)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_signal(&args.out, &rec.signal, args.binary)?;
    let report = json!({
        "method": rec.report.method,
        "iterations": rec.report.iterations,
        "residual": finite(rec.report.residual),
        "wall_ms": rec.report.wall_ms,
        "converged": rec.report.converged,
        "origin": rec.origin,
        "shape": rec.signal.shape(),
        "output": args.out,
    });
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    print_json(&report)
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let profile = stacked_profile_with(&args.scales, args.n, args.d, args.normalization)?;
    let kappa = condition_number(&profile);
    // A vanishing singular value is a finding here, not a failure.
    let prediction = predicted_mse(&profile, args.sigma).ok();
    let continuum_zero = has_continuum_zero(&args.scales, args.d);
    let asymptotic = if args.asymptotic && !continuum_zero {
        Some(asymptotic_trace(&args.scales, args.d, 0)?)
    } else {
        None
    };
    if let Some(path) = &args.csv {
        write_profile_csv(path, &profile)?;
    }
    print_json(&json!({
        "scales": args.scales,
        "n": args.n,
        "d": args.d,
        "normalization": args.normalization,
        "coprime": pairwise_coprime(&args.scales),
        "kappa": finite(kappa.value),
        "kappa_infinite": kappa.infinite,
        "largest_finite_ratio": kappa.largest_finite_ratio,
        "sigma_min": kappa.sigma_min,
        "sigma_max": kappa.sigma_max,
        "trace_normalized": prediction.as_ref().map(|p| p.trace_normalized),
        "rmse_factor": prediction.as_ref().map(|p| p.rmse_factor),
        "mse": prediction.as_ref().map(|p| p.mse),
        "sigma": args.sigma,
        "lower_bound": profile.tradeoff_lower_bound(),
        "zero_frequency": profile.first_zero(),
        "continuum_zero": continuum_zero,
        "asymptotic": asymptotic,
        "units": args.units.describe(&args.scales),
    }))
}

fn write_profile_csv(path: &Path, profile: &spectral::SpectralProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=profile.ndim).map(|a| format!("m{a}")).collect();
    header.extend((1..=profile.ndim).map(|a| format!("omega{a}")));
    header.push("sigma".into());
    w.write_record(&header)?;
    for (i, s) in profile.sigma_values.iter().enumerate() {
        let m = profile.unflatten(i);
        let mut row: Vec<String> = m.iter().map(|v| v.to_string()).collect();
        row.extend(m.iter().map(|&v| profile.omega(v).to_string()));
        row.push(s.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn experiment(cmd: ExperimentCommand) -> Result<()> {
    match cmd {
        ExperimentCommand::Noise(a) => noise(a),
        ExperimentCommand::Scan(a) => scan(a),
        ExperimentCommand::ScaleCount(a) => scale_count(a),
        ExperimentCommand::Traces(a) => traces(a),
    }
}

fn noise(args: NoiseArgs) -> Result<()> {
    let (target, origin) = match &args.target_path {
        Some(path) => (io::load_target(path)?.0, json!({ "target": path })),
        None => {
            let spec = args.target.spec();
            (sim::make_target(&spec)?, serde_json::to_value(&spec)?)
        }
    };
    let mut cfg = ExperimentConfig::new(&args.scales, args.mode, args.sigma, args.trials, args.seed);
    cfg.normalization = args.normalization;
    if let Some(method) = args.method {
        cfg.reconstruction.method = method;
    }
    cfg.reconstruction.lambda = args.lambda;
    let report = sim::run_noise_experiment(&target, &cfg)?;

    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    let mut manifest = Manifest::new(
        ArtifactKind::Report,
        Provenance::now(command_line(), Some(args.seed), json!({ "target": origin })),
    );
    manifest.add_payload(&args.out, "report", "report.json", None, &[])?;

    // Trial 0 regenerated from its own stream, for inspection.
    let clean = forward_stack(&target, &cfg.scales, cfg.mode, cfg.normalization)?;
    let noisy = add_noise_with_rng(&clean, cfg.sigma, &mut sim::trial_rng(cfg.seed, 0))?;
    let rec = recon::reconstruct(&noisy, &cfg.reconstruction)?;
    let mut snapshots = vec![("target", target.clone()), ("reconstruction_trial0", rec.signal.clone())];
    // Local recoveries may cover only the interior.
    if rec.signal.shape() == target.shape() {
        snapshots.push(("residual_trial0", rec.signal.sub(&target)?));
    }
    for (stem, signal) in &snapshots {
        let file = snapshot_name(stem, signal);
        save_signal(&args.out.join(&file), signal, false)?;
        manifest.add_payload(&args.out, "snapshot", &file, None, signal.shape())?;
    }
    manifest.write(&args.out)?;
    print_json(&json!({
        "empirical_rmse": report.empirical_rmse,
        "empirical_rmse_factor": report.empirical_rmse_factor,
        "predicted_rmse_factor": report.predicted.as_ref().map(|p| p.rmse_factor),
        "ratio": report.ratio,
        "ratio_band": report.predicted.as_ref().map(|p| p.ratio_band),
        "within_band": report.within_band,
        "exact": report.exact,
        "wall_ms": report.wall_ms,
    }))
}

fn scan(args: ScanArgs) -> Result<()> {
    let table = sim::coprime_scan(args.kmax, args.n, args.d, args.mode, args.normalization, args.limit)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("scan.json"), &table)?;
    let mut w = csv::Writer::from_path(args.out.join("scan.csv"))?;
    w.write_record(["scales", "coprime", "rmse_factor", "kappa"])?;
    for cell in &table.cells {
        let scales: Vec<String> = cell.scales.iter().map(|k| k.to_string()).collect();
        w.write_record([
            scales.join(" "),
            cell.coprime.to_string(),
            cell.rmse_factor.map_or_else(|| "inf".into(), |v| v.to_string()),
            cell.kappa.map_or_else(|| "inf".into(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    let count = |pred: fn(&sim::ScanCell) -> bool| table.cells.iter().filter(|c| pred(c)).count();
    print_json(&json!({
        "cells": table.cells.len(),
        "singular": count(|c| c.kappa.is_none()),
        // Non-coprime sizes can still be invertible when n avoids their shared blind frequencies.
        "coprime_singular": count(|c| c.coprime && c.kappa.is_none()),
        "non_coprime_finite": count(|c| !c.coprime && c.kappa.is_some()),
        "out": args.out,
    }))
}

fn scale_count(args: ScaleCountArgs) -> Result<()> {
    let mut spec = args.target.spec();
    if args.target.d.is_none() {
        spec.shape = vec![args.target.n; 2];
    }
    let target = sim::make_target(&spec)?;
    fs::create_dir_all(&args.out)?;
    let mut reports = Vec::new();
    for run in 0..args.runs {
        let cfg = ScaleCountConfig {
            scales: args.scales.clone(),
            sigma: args.sigma,
            lambda: args.lambda,
            seed: args.seed + run,
            blind_radius: args.radius,
        };
        let report = sim::scale_count_comparison(&target, &cfg)?;
        if run == 0 {
            save_signal(&args.out.join("target.pgm"), &target, false)?;
            for (row, rec) in report.rows.iter().zip(&report.reconstructions) {
                let tag: Vec<String> = row.scales.iter().map(|k| k.to_string()).collect();
                let tag = tag.join("_");
                save_signal(&args.out.join(format!("reconstruction_{tag}.pgm")), rec, false)?;
                let residual = rec.sub(&target)?;
                save_signal(&args.out.join(format!("residual_{tag}.pgm")), &residual, false)?;
            }
        }
        reports.push(report);
    }
    let mut w = csv::Writer::from_path(args.out.join("scale_count.csv"))?;
    w.write_record(["seed", "scales", "rmse", "blind_energy_two", "blind_energy_three"])?;
    for r in &reports {
        for row in &r.rows {
            let tag: Vec<String> = row.scales.iter().map(|k| k.to_string()).collect();
            w.write_record([
                r.config.seed.to_string(),
                tag.join(" "),
                row.rmse.to_string(),
                r.blind_energy_fraction_two.to_string(),
                r.blind_energy_fraction_three.to_string(),
            ])?;
        }
    }
    w.flush()?;
    write_json(&args.out.join("scale_count.json"), &reports)?;
    let ordered = reports.iter().filter(|r| r.strictly_decreasing).count();
    print_json(&json!({
        "runs": reports.len(),
        "strictly_decreasing": ordered,
        "blind_area_fraction": reports.first().map(|r| r.blind_area_fraction),
        "min_blind_energy_two": reports
            .iter()
            .map(|r| r.blind_energy_fraction_two)
            .fold(f64::INFINITY, f64::min),
        "out": args.out,
        "units": args.units.describe(&args.scales),
    }))
}

fn traces(args: TraceArgs) -> Result<()> {
    let sweep = sim::trace_convergence_sweep(&args.scales, args.d, &args.sizes)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("traces.json"), &sweep)?;
    let mut w = csv::Writer::from_path(args.out.join("traces.csv"))?;
    w.write_record(["n", "cyclic", "valid", "asymptotic"])?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for row in &sweep.rows {
        w.write_record([row.n.to_string(), cell(row.cyclic), cell(row.valid), cell(sweep.asymptotic)])?;
    }
    w.flush()?;
    print_json(&sweep)
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    match &args.input {
        Some(input) => {
            let (ms, _) = io::load_measurements(input)?;
            let report = dense_rank(ms.scales(), ms.mode(), ms.source_shape())?;
            let solution = if report.full_column_rank() || args.lambda > 0.0 {
                let u = dense_oracle(&ms, args.lambda)?;
                if let Some(out) = &args.out {
                    save_signal(out, &u, false)?;
                }
                Some(recon::measurement_residual(&ms, &u)?)
            } else {
                None
            };
            print_json(&json!({
                "rank": report,
                "full_column_rank": report.full_column_rank(),
                "deficiency": report.deficiency(),
                "residual": solution,
                "output": solution.and(args.out.as_ref()),
            }))
        }
        None => {
            let n = args
                .n
                .ok_or_else(|| CliError::Usage("either --input or --n with --scales is required".into()))?;
            if args.scales.is_empty() {
                return Err(CliError::Usage("--scales is required without --input".into()));
            }
            let report = dense_rank(&args.scales, args.mode, &vec![n; args.d])?;
            print_json(&json!({
                "rank": report,
                "full_column_rank": report.full_column_rank(),
                "deficiency": report.deficiency(),
            }))
        }
    }
}
