use std::hint::black_box;
use std::sync::Arc;

use balancer_core::harness::baselines::{linf, offline_oracle};
use balancer_core::harness::config::RunConfig;
use balancer_core::harness::inputs::{InputSampler, InputSpec};
use balancer_core::harness::runs::{VectorRunner, VectorSetup};
use balancer_core::multicolor::{build_tree, MulticolorBalancer};
use balancer_core::testsets::{build_body, build_chaining_net, BodyKind, BodyOptions, NetOptions};
use balancer_core::tusnady::{dyadic_boxes_for_point, run_tusnady, DyadicGrid, PointDistribution, TusnadyConfig};
use balancer_core::{default_lambda, dyadic_reduce, CovarianceModel};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DMatrix;

fn komlos_runner(n: usize) -> VectorRunner {
    let cfg = RunConfig::parse(&format!("setting = komlos\nn = {n}\nT = 100000\ndist = sparse:4\nseed = 1")).unwrap();
    let setup = Arc::new(VectorSetup::build(&cfg).unwrap());
    VectorRunner::new(setup, &cfg).unwrap()
}

fn potential_step(c: &mut Criterion) {
    for n in [16, 64] {
        let mut runner = komlos_runner(n);
        c.bench_function(&format!("komlos step n={n}"), |b| b.iter(|| black_box(runner.step().unwrap())));
    }
}

fn multicolor_assign(c: &mut Criterion) {
    let cfg = RunConfig::parse("setting = komlos\nn = 8\nT = 10000\ndist = sparse:2\nseed = 1").unwrap();
    let setup = VectorSetup::build(&cfg).unwrap();
    let tree = build_tree(&[1.0, 2.5, 1.5, 4.0, 3.0], 4.0).unwrap();
    let mut bal = MulticolorBalancer::new(tree, setup.dec.clone(), setup.atoms.clone().unwrap(), setup.lambda).unwrap();
    let mut inputs = InputSampler::new(InputSpec::Sparse(2), 8, 3);
    c.bench_function("multicolor assign R=5", |b| b.iter(|| black_box(bal.assign(&inputs.next_vector()).unwrap())));
}

fn tusnady(c: &mut Criterion) {
    let grid = DyadicGrid::new(4096, 2).unwrap();
    c.bench_function("dyadic boxes for point d=2", |b| {
        b.iter(|| black_box(dyadic_boxes_for_point(&[0.3141, 0.2718], &grid).unwrap()))
    });
    let mut g = c.benchmark_group("tusnady run");
    g.sample_size(10);
    g.bench_function("T=1024 d=2", |b| {
        b.iter(|| black_box(run_tusnady(&TusnadyConfig::new(1024, 2, PointDistribution::Uniform, 1)).unwrap()))
    });
    g.finish();
}

fn chaining(c: &mut Criterion) {
    let n = 4;
    let body = build_body(BodyKind::EuclideanBall, n, &BodyOptions { cloud_size: Some(2048), ..Default::default() })
        .unwrap();
    let model = CovarianceModel::from_matrix(DMatrix::identity(n, n) / n as f64).unwrap();
    let dec = dyadic_reduce(&model, 32).unwrap();
    let lambda = default_lambda(32, n, 10_000);
    let mut g = c.benchmark_group("chaining");
    g.sample_size(10);
    g.bench_function("ball net n=4", |b| {
        b.iter(|| black_box(build_chaining_net(&body, &dec, lambda, &NetOptions::for_run(n, 10_000, 1)).unwrap()))
    });
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let vectors: Vec<Vec<f64>> = InputSampler::new(InputSpec::Sparse(2), 4, 9).take(14).collect();
    c.bench_function("offline oracle T=14", |b| {
        b.iter_batched(|| vectors.clone(), |v| black_box(offline_oracle(&v, linf).unwrap()), BatchSize::SmallInput)
    });
}

criterion_group!(benches, potential_step, multicolor_assign, tusnady, chaining, oracle);
criterion_main!(benches);
