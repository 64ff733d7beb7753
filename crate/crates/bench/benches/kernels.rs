use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use phononbus_core::decoherence::{f_n_equilibrium, IntegralConfig, SpectralDensity};
use phononbus_core::layout::{build_coupling_matrix, Boundary, Layout};
use phononbus_core::modes::diagonalize;
use phononbus_core::oracle::{oracle_f_n, OracleConfig, TruncatedMode};
use phononbus_core::pulses::{delta_beta, EchoFamily};

fn filter(c: &mut Criterion) {
    let seq = EchoFamily::new(4, 100, 1.0).unwrap().sequence();
    let kernel = seq.kernel();
    c.bench_function("amplitude_sq echo k=4 n=100", |b| b.iter(|| kernel.amplitude_sq(black_box(1.37))));
    c.bench_function("beta direct k=4 n=100", |b| b.iter(|| seq.beta_sq(black_box(1.37))));
}

fn modes(c: &mut Criterion) {
    let layout = Layout::Lattice2D {
        lx: 20,
        ly: 20,
        g: 0.2,
        boundary: Boundary::Open,
    };
    let g = build_coupling_matrix(&layout).unwrap();
    c.bench_function("diagonalize 20x20 lattice", |b| b.iter(|| diagonalize(black_box(&g), 1.0).unwrap()));
    let spectrum = diagonalize(&g, 1.0).unwrap();
    let seq = EchoFamily::new(4, 20, 2.0 * spectrum.omega[0]).unwrap().sequence();
    c.bench_function("delta_beta 400 modes", |b| b.iter(|| delta_beta(black_box(&spectrum), &seq)));
}

fn quadrature(c: &mut Criterion) {
    let seq = EchoFamily::new(4, 50, 1.0).unwrap().sequence();
    let j = SpectralDensity::Ohmic { q: 1e6 };
    let cfg = IntegralConfig::default();
    c.bench_function("f_n equilibrium k=4 n=50", |b| {
        b.iter(|| f_n_equilibrium(black_box(1.5), &j, 1e-3, &seq, 0.05, &cfg).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let seq = EchoFamily::new(2, 2, 1.0).unwrap().sequence();
    let mode = TruncatedMode {
        dim: None,
        omega: 1.13,
        gamma: 0.01 / seq.t_g(),
        n_bath: 2.0,
        n0: 0.0,
    };
    let cfg = OracleConfig::default();
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("two-cycle k=2 echo", |b| b.iter(|| oracle_f_n(black_box(&mode), &seq, 0.1, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, filter, modes, quadrature, oracle);
criterion_main!(benches);
