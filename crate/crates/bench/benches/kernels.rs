use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use daqsim_bench::{heisenberg_workload, hermitian_workload, ising_workload, rabi_workload};
use daqsim_core::lightmatter::run_da_rabi;
use daqsim_core::linalg::Propagator;
use daqsim_core::trotter::{digital_error, scan};

fn circuits(c: &mut Criterion) {
    let ising = ising_workload(10).unwrap();
    c.bench_function("ising3_l10_unitary", |b| b.iter(|| black_box(&ising).unitary().unwrap()));

    let plan = heisenberg_workload(4, 8).unwrap();
    c.bench_function("heisenberg4_digital_error", |b| b.iter(|| digital_error(black_box(&plan)).unwrap()));
    c.bench_function("heisenberg4_scan", |b| b.iter(|| scan(black_box(&plan), &[1, 2, 4, 8, 16]).unwrap()));
}

fn propagators(c: &mut Criterion) {
    for n in [4, 6] {
        let h = hermitian_workload(n).unwrap();
        c.bench_function(&format!("propagator_dim{}", 1 << n), |b| {
            b.iter(|| Propagator::new(black_box(&h)).unwrap().unitary(0.3))
        });
    }
}

fn digital_analog(c: &mut Criterion) {
    let p = rabi_workload(10, 16);
    let s0 = p.ground_state().unwrap();
    c.bench_function("da_rabi_l10_fock16", |b| b.iter(|| run_da_rabi(black_box(&p), &s0).unwrap()));
}

criterion_group!(benches, circuits, propagators, digital_analog);
criterion_main!(benches);
