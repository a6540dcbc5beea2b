use std::hint::black_box;

use aoi_cr::par::Execution;
use aoi_cr::sim::{simulate, Mode, SimSettings};
use aoi_cr::sweep::{run_sweep, Engine, SweepSpec};
use aoi_cr::{Scheme, SystemConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn sweep_spec() -> SweepSpec {
    let mut spec = SweepSpec::new(SystemConfig::default(), "p:0.05:0.95:8".parse().unwrap());
    spec.engines = vec![Engine::Analytic, Engine::Simulate];
    spec.slots = 100_000;
    spec.warmup = 1_000;
    spec
}

fn sweep_execution(c: &mut Criterion) {
    let spec = sweep_spec();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| run_sweep(black_box(&spec), exec).unwrap())
        });
    }
    g.finish();
}

fn simulator_throughput(c: &mut Criterion) {
    const SLOTS: u64 = 200_000;
    let cfg = SystemConfig::default();
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.throughput(Throughput::Elements(SLOTS));
    for scheme in Scheme::BOTH {
        for mode in [Mode::Fading, Mode::Abstract] {
            let settings = SimSettings::new(scheme, mode, SLOTS, 1);
            g.bench_function(format!("{scheme}/{mode}"), |b| {
                b.iter(|| simulate(black_box(&cfg), &settings).unwrap())
            });
        }
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    c.bench_function("analyze", |b| b.iter(|| aoi_cr::analysis::analyze(black_box(&cfg)).unwrap()));
}

criterion_group!(benches, sweep_execution, simulator_throughput, closed_forms);
criterion_main!(benches);
