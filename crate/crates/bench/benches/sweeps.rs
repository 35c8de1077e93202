use criterion::{BenchmarkId, Criterion, Throughput};
use hexcross::sampler::Dynamics;
use hexcross::HexDomain;
use hexcross_bench::{ising, warm_chain};

pub fn heat_bath(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat_bath_sweep");
    for l in [8, 16, 32] {
        let d = HexDomain::hex_box(l, l).unwrap();
        group.throughput(Throughput::Elements(d.len() as u64));
        for x in [0.3, 0.577] {
            let mut chain = warm_chain(&d, ising(x), Dynamics::HeatBath, 20);
            group.bench_function(BenchmarkId::new(format!("x={x}"), l), |b| b.iter(|| chain.sweep()));
        }
    }
    group.finish();
}

pub fn wolff(c: &mut Criterion) {
    let mut group = c.benchmark_group("wolff_sweep");
    for l in [16, 32] {
        let d = HexDomain::hex_box(l, l).unwrap();
        group.throughput(Throughput::Elements(d.len() as u64));
        let mut chain = warm_chain(&d, ising(0.577), Dynamics::Wolff, 20);
        group.bench_function(BenchmarkId::from_parameter(l), |b| b.iter(|| chain.sweep()));
    }
    group.finish();
}
