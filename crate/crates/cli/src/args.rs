use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msr_core::{ConvMode, Method, Normalization, PadPolicy, TargetKind};

#[derive(Debug, Parser)]
#[command(name = "msr", version, about = "Multiscale box-binned super-resolution toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic target and its manifest.
    Synth(SynthArgs),
    /// Simulate box measurements of a target at several scales.
    Measure(MeasureArgs),
    /// Reconstruct a signal from a measurement set.
    Reconstruct(ReconstructArgs),
    /// Spectral stability summary of a set of box sizes.
    Analyze(AnalyzeArgs),
    /// Reproducible simulation studies.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Dense explicit-matrix solve and rank report (small problems).
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pgm,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    #[arg(long, default_value = "random")]
    pub kind: TargetKind,
    /// Side length of the grid.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Dimension; defaults to 1 for gratings and 2 otherwise.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub growth: usize,
    #[arg(long, default_value_t = 16)]
    pub sectors: usize,
    #[arg(long, default_value_t = 1)]
    pub period: usize,
    /// Seed for random targets.
    #[arg(long = "target-seed", default_value_t = 0)]
    pub target_seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub high: f64,
    /// Image to load for `--kind from-file`.
    #[arg(long)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// File format; CSV for 1-D and PGM for 2-D by default.
    #[arg(long)]
    pub format: Option<Format>,
    /// Binary (P5) instead of text (P2) PGM.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Target manifest, its directory, or a bare CSV/PGM signal.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub scales: Vec<usize>,
    #[arg(long, default_value = "valid")]
    pub mode: ConvMode,
    #[arg(long, default_value = "mean")]
    pub normalization: Normalization,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Measurement-set manifest or its directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "fourier")]
    pub method: Method,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value = "reject")]
    pub pad: PadPolicy,
    /// Expected convolution mode; must match the manifest.
    #[arg(long)]
    pub mode: Option<ConvMode>,
    /// Output signal (.csv or .pgm).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Binary (P5) instead of text (P2) PGM output.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub scales: Vec<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "mean")]
    pub normalization: Normalization,
    /// Noise level for the MSE prediction.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Write the singular-value profile as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also compute the large-n trace limit.
    #[arg(long)]
    pub asymptotic: bool,
    #[command(flatten)]
    pub units: UnitArgs,
}

/// Physical pixel pitch, used only to label reported sizes.
#[derive(Debug, Args)]
pub struct UnitArgs {
    /// Fine-grid pixel pitch in micrometres (display only).
    #[arg(long)]
    pub pixel_um: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Monte-Carlo error against the closed-form prediction.
    Noise(NoiseArgs),
    /// Predicted noise amplification over all pairs (1-D) or triples (2-D).
    Scan(ScanArgs),
    /// One versus two versus three boxes on a 2-D target.
    ScaleCount(ScaleCountArgs),
    /// Normalized trace against grid size.
    Traces(TraceArgs),
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Use this target (manifest or signal file) instead of synthesising one.
    #[arg(long = "target")]
    pub target_path: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub scales: Vec<usize>,
    #[arg(long, default_value = "cyclic")]
    pub mode: ConvMode,
    #[arg(long, default_value = "mean")]
    pub normalization: Normalization,
    /// Defaults to fourier for cyclic data and lsqr otherwise.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 256)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 25)]
    pub kmax: usize,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "cyclic")]
    pub mode: ConvMode,
    #[arg(long, default_value = "mean")]
    pub normalization: Normalization,
    /// Stop after this many cells.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScaleCountArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, value_delimiter = ',', default_value = "9,10,11")]
    pub scales: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda: f64,
    /// Number of seeded runs.
    #[arg(long, default_value_t = 10)]
    pub runs: u64,
    /// First seed; runs use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Blind-neighbourhood half-width in grid steps (default n/64).
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub units: UnitArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_delimiter = ',', default_value = "9,11")]
    pub scales: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "50,100,150,200,250,300,350,400,1000,2000,5000,10000"
    )]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Measurement set to solve; omit for a rank report only.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<usize>,
    #[arg(long, default_value = "valid")]
    pub mode: ConvMode,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
}
