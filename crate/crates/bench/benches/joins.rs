use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use coljoin::workloads::{gen_pk_fk, WorkloadSpec};
use coljoin::{run_join, JoinOptions, JoinTask, Variant};

fn bench_variants(c: &mut Criterion) {
    let spec = WorkloadSpec {
        r_rows: 1 << 18,
        s_rows: 1 << 18,
        r_payloads: 2,
        s_payloads: 2,
        ..WorkloadSpec::default()
    };
    let (r, s) = gen_pk_fk(&spec).unwrap();
    let options = JoinOptions {
        pk_fk: true,
        ..JoinOptions::default()
    };
    let mut group = c.benchmark_group("join");
    group.throughput(Throughput::Elements((spec.r_rows + spec.s_rows) as u64));
    group.sample_size(10);
    for variant in Variant::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(variant), &variant, |b, &v| {
            b.iter(|| run_join(&JoinTask::new(v, &r, &s).with_options(options.clone())).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_variants);
criterion_main!(benches);
