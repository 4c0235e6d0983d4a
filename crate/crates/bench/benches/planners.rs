use criterion::{criterion_group, criterion_main, Criterion};
use fluxguide::ls::flux_jacobian;
use fluxguide::{
    flux_quad_boundary, parameterize, plan_fg, plan_ls, FgConfig, KinematicLimits, LeaderQuad, LsConfig, PointCharge,
    TargetModel, Vec3,
};
use std::hint::black_box;

fn start() -> LeaderQuad {
    LeaderQuad::square_yz(Vec3::zeros(), 5.0).unwrap()
}

fn flux(c: &mut Criterion) {
    let q = start();
    let t = PointCharge::unit(Vec3::new(40., 40., 40.)).unwrap();
    c.bench_function("flux_quad_boundary", |b| b.iter(|| flux_quad_boundary(black_box(&t), black_box(&q))));
    c.bench_function("flux_jacobian", |b| b.iter(|| flux_jacobian(black_box(&q), black_box(&t))));
}

fn planners(c: &mut Criterion) {
    let q = start();
    let target = Vec3::new(-40., 40., 40.);
    let mut g = c.benchmark_group("planners");
    g.sample_size(10);
    g.bench_function("ls_beta400", |b| {
        let cfg = LsConfig { beta: 400.0, ..LsConfig::default() };
        let t = PointCharge::unit(target).unwrap();
        b.iter(|| plan_ls(&q, &t, &cfg))
    });
    g.bench_function("fg", |b| {
        let t = TargetModel::single(target).unwrap();
        b.iter(|| plan_fg(&q, &t, &FgConfig::default()))
    });
    let path = plan_fg(&q, &TargetModel::single(target).unwrap(), &FgConfig::default()).unwrap();
    let limits = KinematicLimits { v_max: 10.0, a_max: 5.0 };
    g.bench_function("parameterize", |b| b.iter(|| parameterize(black_box(&path), &limits, 0.02)));
    g.finish();
}

criterion_group!(benches, flux, planners);
criterion_main!(benches);
