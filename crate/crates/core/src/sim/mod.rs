//! Synthetic targets and Monte-Carlo experiments.

mod experiment;
mod target;

pub use experiment::{
    blind_mask, coprime_scan, run_noise_experiment, scale_count_comparison, trace_convergence_sweep,
    trial_rng, ExperimentConfig, ExperimentReport, Prediction, ScaleCountConfig, ScaleCountReport,
    ScaleCountRow, ScanCell, ScanTable, TraceRow, TraceSweep,
};
pub use target::{make_target, TargetKind, TargetSpec};
