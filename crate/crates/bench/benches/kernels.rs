use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dimcert_core::*;

fn damped() -> ProblemParameters {
    ProblemParameters::new(6.0, 0.1, 0.1, 0.5)
        .unwrap()
        .with_forcing(ForcingSpec::gaussian(1.0, 0.0, 1.0).with_norm(1.0))
        .with_nonlinearity(NonlinearitySpec::new(NonlinearityKind::ScaledTanh, 0.5))
}

fn semigroup_apply(c: &mut Criterion) {
    let grid = Grid::new(32.0, 4096).unwrap();
    let phi = Field::from_fn(grid, |x| (-x * x).exp());
    c.bench_function("semigroup_apply_4096", |b| {
        b.iter(|| apply_semigroup(black_box(0.1), &phi, 1.0).unwrap())
    });
}

fn integrate_reference(c: &mut Criterion) {
    let p = damped();
    let grid = Grid::new(32.0, 512).unwrap();
    let spec = InitialHistorySpec::RandomBumps { max_norm: 5.0, support: 3.0, bumps: 3 };
    let phi = HistorySegment::from_spec(&spec, grid, p.tau, 20, &mut SeededRng::new(1));
    c.bench_function("integrate_512x20_horizon_5", |b| {
        b.iter(|| integrate(black_box(&phi), 5.0, &p).unwrap())
    });
}

fn roots(c: &mut Criterion) {
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    c.bench_function("characteristic_roots_9", |b| {
        b.iter(|| characteristic_roots(black_box(0.6), &p, 9).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let p = damped();
    let sd = spectral_partition(&p, 4.0, 1, 16, 12).unwrap();
    let est = compute_estimates(&p, p.norm_g(), 0.0);
    let opts = OptimizerOptions { max_cut: 4, ..Default::default() };
    let mut group = c.benchmark_group("optimize_certificate");
    group.sample_size(10);
    group.bench_function("hausdorff_cut4", |b| {
        b.iter(|| optimize_certificate(&p, &sd, &est, CertificateKind::Hausdorff, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, semigroup_apply, integrate_reference, roots, optimizer);
criterion_main!(benches);
