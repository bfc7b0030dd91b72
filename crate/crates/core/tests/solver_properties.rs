//! Cross-solver invariants on seeded random problems.

use msr_core::recon::{
    apply_filters, dense_oracle, fourier_reconstruct, fourier_reconstruct_padded, lsqr_reconstruct,
    per_scale_filters, reconstruct,
};
use msr_core::signal::{add_noise, forward_stack};
use msr_core::{ConvMode, Error, GridSignal, Method, Normalization, PadPolicy, ReconstructionConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], seed: u64) -> GridSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.iter().product();
    GridSignal::new(shape.to_vec(), (0..len).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn tight_lsqr() -> ReconstructionConfig {
    ReconstructionConfig {
        tol: 1e-14,
        max_iter: Some(50_000),
        ..ReconstructionConfig::new(Method::Lsqr, 0.0)
    }
}

const PAIRS: [[usize; 2]; 6] = [[2, 3], [3, 4], [3, 5], [4, 7], [5, 6], [5, 8]];
const TRIPLES: [[usize; 3]; 3] = [[2, 3, 5], [3, 4, 5], [2, 5, 7]];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noiseless_cyclic_round_trip(seed in 0u64..10_000, two_d in any::<bool>(), pick in 0usize..3, n in 10usize..=24) {
        let (scales, shape): (Vec<usize>, Vec<usize>) = if two_d {
            (TRIPLES[pick].to_vec(), vec![n, n])
        } else {
            (PAIRS[pick * 2].to_vec(), vec![n * 2 + 16])
        };
        let u = random(&shape, seed);
        let ms = forward_stack(&u, &scales, ConvMode::Cyclic, Normalization::Mean).unwrap();
        for method in [Method::Fourier, Method::Lsqr, Method::Local] {
            let cfg = if method == Method::Lsqr { tight_lsqr() } else { ReconstructionConfig::new(method, 0.0) };
            match reconstruct(&ms, &cfg) {
                Ok(rec) => prop_assert!(rec.signal.max_abs_diff(&u) <= 1e-6, "{method:?}"),
                // Local windows can outgrow small grids; that must be a clean size error.
                Err(Error::KernelTooLarge { k, n: len, .. }) if method == Method::Local => prop_assert!(k > len),
                Err(e) => prop_assert!(false, "{method:?}: {e}"),
            }
        }
    }

    #[test]
    fn lsqr_matches_oracle_on_valid(seed in 0u64..10_000, pick in 0usize..6, n in 12usize..=40) {
        let scales = PAIRS[pick];
        let u = random(&[n], seed);
        let ms = add_noise(&forward_stack(&u, &scales, ConvMode::Valid, Normalization::Mean).unwrap(), 0.1, seed).unwrap();
        let (x, r) = lsqr_reconstruct(&ms, &tight_lsqr()).unwrap();
        prop_assert!(r.converged);
        let o = dense_oracle(&ms, 0.0).unwrap();
        prop_assert!(x.max_abs_diff(&o) <= 1e-6);
    }

    #[test]
    fn ridge_solutions_agree(seed in 0u64..10_000, lambda in 1e-4f64..1.0) {
        let u = random(&[8, 8], seed);
        let ms = add_noise(&forward_stack(&u, &[2, 4], ConvMode::Cyclic, Normalization::Mean).unwrap(), 0.1, seed).unwrap();
        let f = fourier_reconstruct(&ms, lambda).unwrap();
        let o = dense_oracle(&ms, lambda).unwrap();
        let cfg = ReconstructionConfig { tol: 1e-14, max_iter: Some(10_000), ..ReconstructionConfig::new(Method::Lsqr, lambda) };
        let (l, _) = lsqr_reconstruct(&ms, &cfg).unwrap();
        prop_assert!(f.max_abs_diff(&o) < 1e-8);
        prop_assert!(l.max_abs_diff(&o) < 1e-6);
    }

    #[test]
    fn filter_bank_equals_direct_solve(seed in 0u64..10_000, lambda in 0.0f64..0.5) {
        let u = random(&[12], seed);
        let ms = add_noise(&forward_stack(&u, &[2, 3], ConvMode::Cyclic, Normalization::Mean).unwrap(), 0.05, seed).unwrap();
        let filters = per_scale_filters(ms.scales(), ms.source_shape(), lambda, ms.normalization()).unwrap();
        let a = apply_filters(&ms, &filters).unwrap();
        let b = fourier_reconstruct(&ms, lambda).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }
}

#[test]
fn non_coprime_cyclic_reports_the_blind_frequency() {
    let u = random(&[12], 1);
    let ms = forward_stack(&u, &[2, 4], ConvMode::Cyclic, Normalization::Mean).unwrap();
    match fourier_reconstruct(&ms, 0.0) {
        Err(Error::NonInvertible { frequency: Some(f), .. }) => assert_eq!(f, vec![6]),
        other => panic!("expected a non-invertible error, got {other:?}"),
    }
}

#[test]
fn full_mode_fourier_is_exact() {
    let u = random(&[30], 2);
    let ms = forward_stack(&u, &[3, 5], ConvMode::Full, Normalization::Unit).unwrap();
    let x = fourier_reconstruct_padded(&ms, 0.0, PadPolicy::Reject).unwrap();
    assert!(x.max_abs_diff(&u) < 1e-9);
}

#[test]
fn valid_fourier_requires_a_pad_policy() {
    let u = random(&[30], 3);
    let ms = forward_stack(&u, &[3, 5], ConvMode::Valid, Normalization::Mean).unwrap();
    assert!(fourier_reconstruct_padded(&ms, 0.0, PadPolicy::Reject).is_err());
    // Padding is an approximation: close in the interior, not exact.
    let x = fourier_reconstruct_padded(&ms, 1e-6, PadPolicy::Reflect).unwrap();
    assert_eq!(x.shape(), u.shape());
}

#[test]
fn local_method_is_not_variance_optimal() {
    use msr_core::sim::{run_noise_experiment, ExperimentConfig};
    let u = random(&[512], 4);
    let mut fourier = ExperimentConfig::new(&[3, 4], ConvMode::Cyclic, 0.1, 64, 9);
    fourier.normalization = Normalization::Unit;
    let mut local = fourier.clone();
    local.reconstruction = ReconstructionConfig::new(Method::Local, 0.0);
    let f = run_noise_experiment(&u, &fourier).unwrap();
    let l = run_noise_experiment(&u, &local).unwrap();
    assert!(l.empirical_rmse > f.empirical_rmse);
}
