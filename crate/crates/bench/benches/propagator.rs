use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qchaos_bench::double_well;
use qchaos_core::diagnostics::von_neumann_entropy;
use qchaos_core::phase_space::wigner_to_density;
use qchaos_core::{BracketMode, Propagator};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    for n in [128usize, 256, 512] {
        let f = double_well(n);
        for mode in [BracketMode::Poisson, BracketMode::MoyalExact] {
            let mut prop = Propagator::new(&f.grid, &f.potential, &f.env, mode, 0.01, false).unwrap();
            let mut w = f.state.clone();
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), n), &n, |b, _| {
                b.iter(|| prop.advance(&mut w, 1).unwrap())
            });
        }
    }
    group.finish();
}

fn density(c: &mut Criterion) {
    let mut group = c.benchmark_group("density");
    group.sample_size(10);
    for n in [64usize, 128, 256] {
        let f = double_well(n);
        group.bench_with_input(BenchmarkId::new("wigner_to_density", n), &n, |b, _| {
            b.iter(|| wigner_to_density(&f.state).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("von_neumann", n), &n, |b, _| {
            b.iter(|| von_neumann_entropy(&f.state).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, step, density);
criterion_main!(benches);
