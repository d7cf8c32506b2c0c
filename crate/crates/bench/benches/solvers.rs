use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wdg_offload::{ga, generate, graph4edge_linear, graph4edge_nonlinear, pso, GenSpec, MetaheuristicConfig, SolveConfig};

const SIZES: [usize; 4] = [10, 30, 50, 100];

fn graph4edge(c: &mut Criterion) {
    let cfg = SolveConfig::default().with_fraction(1.3);
    let mut group = c.benchmark_group("graph4edge");
    for n in SIZES {
        let nonlinear = generate(&GenSpec::new(n, 1)).unwrap();
        let linear = generate(&GenSpec::new(n, 1).sequential()).unwrap();
        group.bench_with_input(BenchmarkId::new("nonlinear", n), &nonlinear, |b, w| {
            b.iter(|| graph4edge_nonlinear(w, &BTreeSet::new(), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("linear", n), &linear, |b, w| {
            b.iter(|| graph4edge_linear(w, &BTreeSet::new(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn metaheuristics(c: &mut Criterion) {
    let cfg = SolveConfig::default().with_fraction(1.3);
    let mh = MetaheuristicConfig { repeats: 1, ..Default::default() };
    let mut group = c.benchmark_group("metaheuristics");
    group.sample_size(10);
    for n in SIZES {
        let w = generate(&GenSpec::new(n, 1)).unwrap();
        group.bench_with_input(BenchmarkId::new("pso", n), &w, |b, w| b.iter(|| pso(w, &cfg, &mh).unwrap()));
        group.bench_with_input(BenchmarkId::new("ga", n), &w, |b, w| b.iter(|| ga(w, &cfg, &mh).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, graph4edge, metaheuristics);
criterion_main!(benches);
