//! The fast stacked operator against explicit matrices built independently.

use msr_core::dense::stack_matrix;
use msr_core::signal::{adjoint_stack, forward_stack, StackOperator};
use msr_core::{ConvMode, GridSignal, LinearOperator, MeasurementSet, Normalization};
use nalgebra::DVector;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = ConvMode> {
    prop_oneof![Just(ConvMode::Valid), Just(ConvMode::Full), Just(ConvMode::Cyclic)]
}

fn norm() -> impl Strategy<Value = Normalization> {
    prop_oneof![Just(Normalization::Unit), Just(Normalization::Mean)]
}

/// Shape, distinct scales that fit it, and source values.
fn problem() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<f64>)> {
    (1usize..=2, 4usize..=14, 4usize..=14)
        .prop_flat_map(|(d, r, c)| {
            let shape = if d == 1 { vec![r * 2] } else { vec![r, c] };
            let k_max = *shape.iter().min().unwrap();
            let len = shape.iter().product::<usize>();
            (
                Just(shape),
                proptest::collection::btree_set(1..=k_max, 1..=3),
                proptest::collection::vec(-1.0f64..1.0, len),
            )
        })
        .prop_map(|(shape, scales, values)| (shape, scales.into_iter().collect(), values))
}

proptest! {
    #[test]
    fn forward_matches_explicit_matrix((shape, scales, values) in problem(), mode in mode(), norm in norm()) {
        let u = GridSignal::new(shape.clone(), values.clone()).unwrap();
        let ms = forward_stack(&u, &scales, mode, norm).unwrap();
        let t = stack_matrix(&scales, mode, norm, &shape).unwrap();
        let want = &t * DVector::from_vec(values);
        let got = ms.flatten();
        for (a, b) in got.iter().zip(want.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_matches_matrix_transpose((shape, scales, _) in problem(), mode in mode(), norm in norm(), seed in 0u64..1000) {
        let t = stack_matrix(&scales, mode, norm, &shape).unwrap();
        let z: Vec<f64> = (0..t.nrows()).map(|i| (((i as u64 * 2654435761 + seed) % 1000) as f64) / 500.0 - 1.0).collect();
        let op = StackOperator::new(&scales, mode, norm, &shape).unwrap();
        let mut got = vec![0.0; op.cols()];
        op.apply_adjoint(&z, &mut got);
        let want = t.transpose() * DVector::from_vec(z.clone());
        for (a, b) in got.iter().zip(want.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // The measurement-set entry point agrees with the operator.
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut sorted = scales.clone();
        sorted.sort_unstable();
        for &k in &sorted {
            let out = mode.output_shape(&shape, k).unwrap();
            let len: usize = out.iter().product();
            blocks.push(GridSignal::new(out, z[offset..offset + len].to_vec()).unwrap());
            offset += len;
        }
        let ms = MeasurementSet::new(sorted, blocks, mode, norm, 0.0, shape).unwrap();
        let via_set = adjoint_stack(&ms).unwrap();
        for (a, b) in via_set.values().iter().zip(&got) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_measurement_commutes_with_shifts((shape, scales, values) in problem(), s0 in 0usize..20, s1 in 0usize..20) {
        let u = GridSignal::new(shape.clone(), values).unwrap();
        let offset: Vec<usize> = [s0, s1][..shape.len()].to_vec();
        let a = forward_stack(&u.cyclic_shift(&offset), &scales, ConvMode::Cyclic, Normalization::Mean).unwrap();
        let b = forward_stack(&u, &scales, ConvMode::Cyclic, Normalization::Mean).unwrap();
        for (za, zb) in a.data().iter().zip(b.data()) {
            prop_assert!(za.max_abs_diff(&zb.cyclic_shift(&offset)) < 1e-12);
        }
    }

    #[test]
    fn mean_boxes_preserve_constants(shape_len in 4usize..30, c in -5.0f64..5.0, k in 1usize..4) {
        let u = GridSignal::filled(&[shape_len], c).unwrap();
        let ms = forward_stack(&u, &[k], ConvMode::Valid, Normalization::Mean).unwrap();
        prop_assert!(ms.data()[0].values().iter().all(|v| (v - c).abs() < 1e-12));
    }
}
