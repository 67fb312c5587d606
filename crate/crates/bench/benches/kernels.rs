use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use pdae_core::eigenbasis::{tensor_modes, BoundarySpec, BoxDomain};
use pdae_core::modal_dae::matrix_exponential;
use pdae_core::pencil::{is_regular, weierstrass, MatrixPencil};
use pdae_core::sim::wetland::{wetland_model, wetland_setup, WetlandParams};
use pdae_core::sim::{simulate, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

fn pencils(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let mut mask = DMatrix::zeros(n, n);
    for i in 0..4 {
        mask[(i, i)] = 1.0;
    }
    let e = random(&mut rng, n) * mask * random(&mut rng, n);
    let p = MatrixPencil::new(e, random(&mut rng, n)).unwrap();
    let (_, shift) = is_regular(&p);
    c.bench_function("weierstrass 6x6 rank 4", |b| b.iter(|| weierstrass(black_box(&p), shift).unwrap()));

    let m = random(&mut rng, 12);
    c.bench_function("expm 12x12", |b| b.iter(|| matrix_exponential(black_box(&m), 1.5).unwrap()));
}

fn basis(c: &mut Criterion) {
    let dom = BoxDomain::new(vec![PI, 1.0]).unwrap();
    let bc = BoundarySpec::neumann(2);
    c.bench_function("neumann basis 16 modes", |b| b.iter(|| tensor_modes(&dom, &bc, black_box(16)).unwrap()));
}

fn wetland(c: &mut Criterion) {
    let dom = BoxDomain::new(vec![PI, 1.0]).unwrap();
    let basis = tensor_modes(&dom, &BoundarySpec::neumann(2), 16).unwrap();
    let model = wetland_model(WetlandParams::stable_case(), &basis, 0.0);
    let setup = wetland_setup(dom, vec![64, 16]);
    let cfg = SimConfig { dt: 0.01, t_end: 1.0, snapshot_stride: 100, ..SimConfig::default() };
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("wetland 64x16, 100 steps", |b| b.iter(|| simulate(&model, &setup, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, pencils, basis, wetland);
criterion_main!(benches);
