use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use msr_bench::random_square;
use msr_core::signal::StackOperator;
use msr_core::{ConvMode, LinearOperator, Normalization};

/// Forward and adjoint cost should not depend on the box size.
fn apply_by_box_size(c: &mut Criterion) {
    let n = 1024;
    let x = random_square(n, 0).into_values();
    let mut group = c.benchmark_group("stack_operator_1024x1024");
    group.sample_size(20);
    for k in [4usize, 16, 64] {
        let op = StackOperator::new(&[k], ConvMode::Cyclic, Normalization::Mean, &[n, n]).unwrap();
        let mut y = vec![0.0; op.rows()];
        group.bench_with_input(BenchmarkId::new("apply", k), &k, |b, _| {
            b.iter(|| op.apply(&x, &mut y))
        });
        let mut back = vec![0.0; op.cols()];
        group.bench_with_input(BenchmarkId::new("apply_adjoint", k), &k, |b, _| {
            b.iter(|| op.apply_adjoint(&y, &mut back))
        });
    }
    group.finish();
}

criterion_group!(benches, apply_by_box_size);
criterion_main!(benches);
