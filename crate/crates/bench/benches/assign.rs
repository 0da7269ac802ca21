use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qassign_core::aam::{aam_bns_mixed, aam_su2_pm, PmMethod};
use qassign_core::channels::make_bns_channel;
use qassign_core::linalg::{BlochVector, Spin};
use qassign_core::mep::{brillouin_inverse, mep_bns, MepOptions};
use qassign_core::montecarlo::{rejection_estimate, McConfig, Prior};

fn closed_forms(c: &mut Criterion) {
    let rho = BlochVector::new(0.2, -0.3, 0.4).unwrap().to_density();
    c.bench_function("detector aam mixed", |b| b.iter(|| aam_bns_mixed(black_box(&rho), 3).unwrap()));
    let spin = Spin::from_twice(7).unwrap();
    c.bench_function("brillouin inverse j=7/2", |b| b.iter(|| brillouin_inverse(spin, black_box(0.63)).unwrap()));
}

fn solvers(c: &mut Criterion) {
    let rho = BlochVector::new(0.2, -0.3, 0.4).unwrap().to_density();
    let opts = MepOptions::default();
    c.bench_function("detector mep", |b| b.iter(|| mep_bns(black_box(&rho), &opts).unwrap()));
    let mut group = c.benchmark_group("angular momentum p_m");
    for (twice, d_e) in [(3, 1), (3, 4), (7, 8)] {
        let spin = Spin::from_twice(twice).unwrap();
        group.bench_function(format!("j={spin} dE={d_e}"), |b| {
            b.iter(|| aam_su2_pm(spin, d_e, black_box(0.5), &PmMethod::Quadrature, 1e-7).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let channel = make_bns_channel();
    let rho = BlochVector::new(0.1, 0.1, -0.5).unwrap().to_density();
    let config = McConfig::new(0.1, 100_000, 1);
    let mut group = c.benchmark_group("rejection");
    group.sample_size(10);
    group.bench_function("detector pure 1e5", |b| {
        b.iter(|| rejection_estimate(&channel, &rho, &config, Prior::Pure).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_forms, solvers, sampling);
criterion_main!(benches);
