use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qmux_bench::{quick_mc, sweep_protocols, table1};
use qmux_core::{analytic, protocols, LinkGeometry, SimOptions};

fn analytic_rates(c: &mut Criterion) {
    let params = table1();
    let cfgs = sweep_protocols();
    c.bench_function("analytic/all_protocols_200_points", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..200 {
                let g = LinkGeometry::from_km(1.0 + i as f64).unwrap();
                for cfg in &cfgs {
                    acc += analytic::rate(&params, g, cfg).unwrap().rate;
                }
            }
            black_box(acc)
        })
    });
    c.bench_function("analytic/crossover", |b| {
        b.iter(|| {
            analytic::crossover_distance(&params, &cfgs[1], &cfgs[3], analytic::DEFAULT_BRACKET_KM).unwrap()
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let params = table1();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for cfg in sweep_protocols() {
        for km in [50.0, 150.0] {
            let g = LinkGeometry::from_km(km).unwrap();
            group.bench_with_input(BenchmarkId::new(cfg.label(), km), &g, |b, &g| {
                b.iter(|| protocols::simulate(&params, g, &cfg, quick_mc(200), SimOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, analytic_rates, monte_carlo);
criterion_main!(benches);
