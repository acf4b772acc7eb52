use std::hint::black_box;

use cachesel_bench::workload;
use cachesel_core::oracle::feasibility_matrix;
use cachesel_core::{
    count_tap, emit_secondary_trace, run_selection, simulate_private, simulate_private_only,
    simulate_shared, CacheConfig, Deadline, DesignSpace, OracleOptions, SelectionOptions,
    TimingParams,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn private_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("spcs");
    for records in [10_000usize, 100_000] {
        let trace = workload(records, 1);
        group.throughput(Throughput::Elements(records as u64));
        for (name, space) in [("45", DesignSpace::small()), ("75", DesignSpace::full())] {
            group.bench_with_input(BenchmarkId::new(name, records), &trace, |b, t| {
                b.iter(|| simulate_private(black_box(t), &space, 6, None).unwrap())
            });
        }
    }
    group.finish();
}

fn shared_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("sscs");
    let trace = workload(100_000, 2);
    for private in [CacheConfig::new(1, 1, 4).unwrap(), CacheConfig::new(64, 4, 4).unwrap()] {
        let secondary = emit_secondary_trace(&trace, private, 6);
        group.throughput(Throughput::Elements(secondary.len() as u64));
        group.bench_with_input(BenchmarkId::new("75", private), &secondary, |b, s| {
            b.iter(|| simulate_shared(black_box(s), &DesignSpace::full(), None).unwrap())
        });
    }
    group.finish();
}

/// One-config-at-a-time reference, for comparison with the 45-config pass.
fn oracle_private(c: &mut Criterion) {
    let trace = workload(10_000, 1);
    let space = DesignSpace::small();
    c.bench_function("oracle/private_45/10000", |b| {
        b.iter(|| {
            for cfg in space.enumerate() {
                black_box(simulate_private_only(&trace, &cfg, 6));
            }
        })
    });
}

fn oracle_matrix(c: &mut Criterion) {
    let trace = workload(2_000, 3);
    let space = DesignSpace::new(vec![1, 4, 16, 64], vec![1, 2, 4], 4).unwrap();
    let params = TimingParams::default();
    let deadline = Deadline::from_ns(count_tap(&trace) + 4 * trace.len() as u64);
    c.bench_function("oracle/matrix_12x12/2000", |b| {
        b.iter(|| feasibility_matrix(&trace, &space, &space, params, deadline, OracleOptions::default()))
    });
}

fn selection(c: &mut Criterion) {
    let trace = workload(100_000, 4);
    let deadline = Deadline::from_ns(count_tap(&trace) + 5 * trace.len() as u64);
    let space = DesignSpace::full();
    let mut group = c.benchmark_group("select");
    group.sample_size(10);
    group.bench_function("75x75/100000", |b| {
        b.iter(|| {
            run_selection(&trace, &space, &space, TimingParams::default(), deadline, SelectionOptions::default())
        })
    });
    group.finish();
}

criterion_group!(benches, private_pass, shared_pass, oracle_private, oracle_matrix, selection);
criterion_main!(benches);
