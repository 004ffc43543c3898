//! Parallel (rayon global pool) against sequential (one-thread pool) on the
//! hot paths: a dealiased spinor product and a Π projection.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mdlab::clifford::build_gamma_rep;
use mdlab::grid::{Domain, Field, Grid, Kind};
use mdlab::nonlinearity::currents;
use mdlab::spinor::{apply_pi, Sign};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn spinor(n: usize) -> (mdlab::clifford::GammaRep, Field) {
    let rep = build_gamma_rep(3).unwrap();
    let g = Grid::new(3, n, 2.0 * PI).unwrap();
    let mut psi = Field::from_fn(&g, Kind::Spinor, rep.n, Domain::Space, |x, _| {
        (0..4).map(|c| C64::new((x[0] + c as f64).sin() * x[1].cos(), (2.0 * x[2]).cos())).collect()
    });
    psi.remove_mean();
    (rep, psi.fourier())
}

fn bench(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut group = c.benchmark_group("parallel_vs_sequential");
    group.sample_size(10);
    for n in [16, 32] {
        let (rep, psi) = spinor(n);
        group.bench_with_input(BenchmarkId::new("currents/parallel", n), &psi, |b, p| b.iter(|| currents(&rep, p).unwrap()));
        group.bench_with_input(BenchmarkId::new("currents/sequential", n), &psi, |b, p| b.iter(|| single.install(|| currents(&rep, p).unwrap())));
        group.bench_with_input(BenchmarkId::new("pi/parallel", n), &psi, |b, p| b.iter(|| apply_pi(&rep, p, Sign::Plus).unwrap()));
        group.bench_with_input(BenchmarkId::new("pi/sequential", n), &psi, |b, p| b.iter(|| single.install(|| apply_pi(&rep, p, Sign::Plus).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
