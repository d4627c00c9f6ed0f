use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use divbound::bounds::lower_bound_curve;
use divbound::cgf::{cgf_curve, CgfQuery};
use divbound::divergences::make_divergence;
use divbound::measures::{quadrature_dist, Family};
use divbound::par;
use divbound::vajda::height_curve;

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn run<R>(seq: bool, f: impl FnOnce() -> R) -> R {
    if seq {
        par::sequential(f)
    } else {
        f()
    }
}

fn cgf_sweep(c: &mut Criterion) {
    let dist = quadrature_dist(Family::Gaussian { mean: 0.0, sd: 1.0 }, 20).unwrap();
    let ts: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.02).collect();
    let mut group = c.benchmark_group("cgf_curve");
    for name in ["kl", "squared_hellinger"] {
        let q = CgfQuery::new(make_divergence(name, None).unwrap(), dist.clone()).generic();
        for (mode, seq) in modes() {
            group.bench_with_input(BenchmarkId::new(mode, name), &q, |b, q| {
                b.iter(|| run(seq, || cgf_curve(q, black_box(&ts))))
            });
        }
    }
    group.finish();
}

fn bound_sweep(c: &mut Criterion) {
    let dist = quadrature_dist(Family::Uniform { a: -1.0, b: 1.0 }, 12).unwrap();
    let q = CgfQuery::new(make_divergence("chi2", None).unwrap(), dist);
    let ts: Vec<f64> = (-80..=80).map(|i| i as f64 * 0.25).collect();
    let curve = cgf_curve(&q, &ts);
    let eps: Vec<f64> = (-90..=90).map(|i| i as f64 * 0.01).collect();
    let mut group = c.benchmark_group("lower_bound_curve");
    for (mode, seq) in modes() {
        group.bench_function(mode, |b| {
            b.iter(|| {
                run(seq, || {
                    lower_bound_curve(&q, &curve, black_box(&eps)).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn height_sweep(c: &mut Criterion) {
    let spec = make_divergence("jensen_shannon", None).unwrap();
    let ws: Vec<f64> = (1..=100).map(|i| i as f64 * 0.05).collect();
    let mut group = c.benchmark_group("height_curve");
    for (mode, seq) in modes() {
        group.bench_function(mode, |b| {
            b.iter(|| run(seq, || height_curve(&spec, black_box(&ws))))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = cgf_sweep, bound_sweep, height_sweep
}
criterion_main!(benches);
