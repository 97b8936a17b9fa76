use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use coljoin::primitives::{gather, radix_partition, sort_pairs};
use coljoin::workloads::{permutation, CounterRng};
use coljoin::{Column, ExecCtx};

const ROWS: usize = 1 << 20;

fn keys(rows: usize) -> Column {
    let rng = CounterRng::new(7, 1);
    Column::U32((0..rows as u64).map(|i| rng.at(i) as u32).collect())
}

fn ids(rows: usize) -> Column {
    Column::U32((0..rows as u32).collect())
}

fn bench_gather(c: &mut Criterion) {
    let ctx = ExecCtx::new(1);
    let input = keys(ROWS);
    let clustered: Vec<u32> = (0..ROWS as u32).collect();
    let unclustered: Vec<u32> = permutation(ROWS, CounterRng::new(7, 2)).into_iter().map(|v| v as u32).collect();
    let mut group = c.benchmark_group("gather");
    group.throughput(Throughput::Elements(ROWS as u64));
    group.bench_function("clustered", |b| b.iter(|| gather(&ctx, black_box(&input), &clustered).unwrap()));
    group.bench_function("unclustered", |b| b.iter(|| gather(&ctx, black_box(&input), &unclustered).unwrap()));
    group.finish();
}

fn bench_partition(c: &mut Criterion) {
    let ctx = ExecCtx::new(1);
    let (k, v) = (keys(ROWS), ids(ROWS));
    let mut group = c.benchmark_group("radix_partition");
    group.throughput(Throughput::Elements(ROWS as u64));
    for bits in [4u32, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(bits), &bits, |b, &bits| {
            b.iter(|| radix_partition(&ctx, &k, &v, 0, bits).unwrap())
        });
    }
    group.finish();
}

fn bench_sort(c: &mut Criterion) {
    let ctx = ExecCtx::new(1);
    let (k, v) = (keys(ROWS), ids(ROWS));
    let mut group = c.benchmark_group("sort_pairs");
    group.throughput(Throughput::Elements(ROWS as u64));
    group.sample_size(20);
    group.bench_function("u32", |b| b.iter(|| sort_pairs(&ctx, &k, &v).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_gather, bench_partition, bench_sort);
criterion_main!(benches);
