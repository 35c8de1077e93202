mod enumeration;
mod sweeps;

use criterion::{criterion_group, criterion_main};

criterion_group!(
    benches,
    enumeration::partition_function,
    enumeration::event_table,
    sweeps::heat_bath,
    sweeps::wolff,
    connectivity::crossing,
    connectivity::volumes,
);
criterion_main!(benches);
