use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use hexcross::density::horizontal_event;
use hexcross::exact::{event_table as table, partition_function_log};
use hexcross::{BoundaryCondition, HexDomain};
use hexcross_bench::ising;

pub fn partition_function(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition_function");
    group.sample_size(10);
    for (w, h) in [(3, 3), (4, 4), (5, 4)] {
        let d = HexDomain::hex_box(w, h).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d.len()), &d, |b, d| {
            b.iter(|| partition_function_log(black_box(d), &ising(0.5), &BoundaryCondition::Free).unwrap())
        });
    }
    group.finish();
}

pub fn event_table(c: &mut Criterion) {
    let d = HexDomain::hex_box(4, 4).unwrap();
    let events = [horizontal_event(&d).unwrap()];
    let mut group = c.benchmark_group("event_table");
    group.sample_size(10);
    group.bench_function("box_4x4_horizontal", |b| {
        b.iter(|| table(black_box(&d), &ising(0.5), &BoundaryCondition::Wired, &events).unwrap())
    });
    group.finish();
}
