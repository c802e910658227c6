//! Hot-path benchmarks: field multiplication, projection size (fast path
//! and oracle), exceptional-set sweep, and incidence-ledger construction.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use std::sync::Arc;

use qradial_core::constructions::random_set;
use qradial_core::gf::FieldSpec;
use qradial_core::radial::{
    exceptional_set, projection_size, projection_size_oracle, IncidenceLedger,
};
use qradial_core::{PointSet, Space, Threshold};

fn plane(q: u64) -> Space {
    Space::new(Arc::new(FieldSpec::new(q, 1).unwrap()), 2).unwrap()
}

fn bench_field_mul(c: &mut Criterion) {
    let small = FieldSpec::new(2, 8).unwrap(); // table-backed
    let large = FieldSpec::new(2, 17).unwrap(); // reduction on the fly
    c.bench_function("gf_mul_q256_table", |b| {
        b.iter(|| {
            let mut acc = 1u64;
            for x in 1..256u64 {
                acc = small.mul(black_box(acc), black_box(x));
            }
            acc
        })
    });
    c.bench_function("gf_mul_q131072_poly", |b| {
        b.iter(|| {
            let mut acc = 1u64;
            for x in 1..256u64 {
                acc = large.mul(black_box(acc), black_box(x * 511));
            }
            acc
        })
    });
}

fn bench_projection(c: &mut Criterion) {
    let s = plane(101);
    let e_set = random_set(&s, 600, 7, None).unwrap();
    c.bench_function("projection_size_q101_n600", |b| {
        b.iter(|| projection_size(&s, black_box(&e_set), black_box(5050)))
    });
    c.bench_function("projection_size_oracle_q101_n600", |b| {
        b.iter(|| projection_size_oracle(&s, black_box(&e_set), black_box(5050)))
    });
}

fn bench_exceptional_set(c: &mut Criterion) {
    let s = plane(31);
    let e_set = random_set(&s, 120, 11, None).unwrap();
    c.bench_function("exceptional_set_q31_n120", |b| {
        b.iter(|| exceptional_set(&s, black_box(&e_set), Threshold::at_most_int(8)))
    });
}

fn bench_ledger(c: &mut Criterion) {
    let s = plane(31);
    let e_set = random_set(&s, 120, 11, None).unwrap();
    let t_set: PointSet = exceptional_set(&s, &e_set, Threshold::at_most_int(12));
    c.bench_function("ledger_build_q31", |b| {
        b.iter(|| IncidenceLedger::build(&s, black_box(&e_set), black_box(&t_set)))
    });
}

criterion_group!(
    benches,
    bench_field_mul,
    bench_projection,
    bench_exceptional_set,
    bench_ledger
);
criterion_main!(benches);
