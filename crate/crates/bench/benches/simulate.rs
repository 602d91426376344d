use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use upn_core::codegen::Strategy;
use upn_core::compression::compress;
use upn_core::harness::certify;
use upn_core::machines::{rm_to_flowgraph, u22};

/// Inputs on which each reference machine halts.
fn halting_input(s: Strategy) -> [u64; 2] {
    match s {
        Strategy::Compressed | Strategy::Binary => [4, 0],
        _ => [5, 0],
    }
}

fn run_nets(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_to_deadlock");
    for s in Strategy::ALL {
        let net = s.reference().net;
        let m0 = net.input_marking(&halting_input(s)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(s), &m0, |b, m0| {
            b.iter(|| net.run_to_deadlock(black_box(m0), 1_000_000, false))
        });
    }
    group.finish();
}

fn long_run(c: &mut Criterion) {
    let net = Strategy::Direct.reference().net;
    let m0 = net.input_marking(&[0, 0]).unwrap();
    c.bench_function("direct 100k steps", |b| {
        b.iter(|| net.run_to_deadlock(black_box(&m0), 100_000, false))
    });
}

fn cosimulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("certify");
    for s in Strategy::ALL {
        let compiled = s.reference();
        group.bench_function(BenchmarkId::from_parameter(s), |b| {
            b.iter(|| certify(&compiled, black_box(&halting_input(s)), 10_000).unwrap())
        });
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let g = rm_to_flowgraph(&u22());
    c.bench_function("compress u22", |b| b.iter(|| compress(black_box(&g))));
    let mut group = c.benchmark_group("compile");
    for s in Strategy::ALL {
        group.bench_function(BenchmarkId::from_parameter(s), |b| b.iter(|| s.reference()));
    }
    group.finish();
}

criterion_group!(benches, run_nets, long_run, cosimulation, construction);
criterion_main!(benches);
