//! Shared fixtures for the benchmarks in `benches/`.

use msr_core::sim::{make_target, TargetKind, TargetSpec};
use msr_core::signal::forward_stack;
use msr_core::{ConvMode, GridSignal, MeasurementSet, Normalization};

/// Seeded uniform random `n × n` image.
pub fn random_square(n: usize, seed: u64) -> GridSignal {
    let mut spec = TargetSpec::new(TargetKind::Random, &[n, n]);
    spec.seed = seed;
    make_target(&spec).expect("random targets are always constructible")
}

/// Noise-free mean-box measurements of a random `n^d` signal.
pub fn measured(scales: &[usize], mode: ConvMode, n: usize, d: usize) -> MeasurementSet {
    let mut spec = TargetSpec::new(TargetKind::Random, &vec![n; d]);
    spec.seed = 1;
    let u = make_target(&spec).expect("random targets are always constructible");
    forward_stack(&u, scales, mode, Normalization::Mean).expect("box sizes fit the grid")
}
