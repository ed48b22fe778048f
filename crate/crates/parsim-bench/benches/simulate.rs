use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use parsim_bench::{bound_workload, overhead_db};
use parsim_core::scheduler::{simulate, sweep};
use parsim_core::synthgen::gen_fast_like;
use parsim_core::trace::{parse_trace, write_trace};

fn bench_simulate_policies(c: &mut Criterion) {
    let db = overhead_db();
    let mut group = c.benchmark_group("simulate_100k_iterations");
    for (name, schedule) in [
        ("static_block", r#"{"kind": "static_block"}"#),
        (
            "static_chunk_16",
            r#"{"kind": "static_chunk", "chunk": 16}"#,
        ),
        ("dynamic_1", r#"{"kind": "dynamic", "chunk": 1}"#),
        ("dynamic_16", r#"{"kind": "dynamic", "chunk": 16}"#),
    ] {
        let bound = bound_workload(100_000, schedule);
        group.throughput(Throughput::Elements(100_000));
        group.bench_function(name, |b| {
            b.iter(|| simulate(&bound, &db, 8).unwrap().makespan)
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let db = overhead_db();
    let bound = bound_workload(50_000, r#"{"kind": "dynamic", "chunk": 8}"#);
    c.bench_function("sweep_50k_x5_counts", |b| {
        b.iter(|| sweep(&bound, &db, &[1, 2, 4, 8, 16]).unwrap().len())
    });
}

fn bench_trace_io(c: &mut Criterion) {
    let trace = gen_fast_like(2000, 320, 0.1, 7).unwrap().trace;
    let serialized = write_trace(&trace);
    let mut group = c.benchmark_group("trace_io");
    group.throughput(Throughput::Bytes(serialized.len() as u64));
    group.bench_with_input(
        BenchmarkId::new("parse", "2k_rows"),
        &serialized,
        |b, input| b.iter(|| parse_trace(input).unwrap().tasks.len()),
    );
    group.bench_function(BenchmarkId::new("write", "2k_rows"), |b| {
        b.iter(|| write_trace(&trace).len())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_simulate_policies,
    bench_sweep,
    bench_trace_io
);
criterion_main!(benches);
