use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use fbl_bench::{harmonic_problem, harmonic_projector};
use fbl_core::fermion::{counting_law, restricted_spectrum, RestrictedSpectrum};
use fbl_core::grid::{region_mask, Region};
use fbl_core::oscint::{brute_force_oscillatory, GaussianAmplitude, StationaryPhaseProblem};
use fbl_core::sampling::sample;
use fbl_core::spectral::eigendecompose;

fn spectrum(c: &mut Criterion) {
    let problem = harmonic_problem(0.005);
    c.bench_function("eigenpairs below mu, hbar = 1/200", |b| {
        b.iter(|| eigendecompose(black_box(&problem), 1.0).unwrap())
    });
}

fn restricted(c: &mut Criterion) {
    let projector = harmonic_projector(0.005);
    let grid = fbl_core::grid::Grid::new(1, 1.5, projector.nodes()).unwrap();
    let mask = region_mask(&grid, &Region::interval(-0.5, 0.5).unwrap()).unwrap().mask;
    c.bench_function("restricted spectrum, hbar = 1/200", |b| {
        b.iter(|| restricted_spectrum(black_box(&projector), &mask).unwrap())
    });
}

fn poisson_binomial(c: &mut Criterion) {
    let sigma: Vec<f64> = (0..2000).map(|k| (k as f64 + 0.5) / 2000.0).collect();
    let sigma = RestrictedSpectrum::from_values(sigma, 0.01).unwrap();
    c.bench_function("counting law, 2000 Bernoullis", |b| {
        b.iter(|| counting_law(black_box(&sigma)).unwrap())
    });
}

fn sampler(c: &mut Criterion) {
    let projector = harmonic_projector(0.02);
    c.bench_function("100 projection DPP draws, N = 25", |b| {
        b.iter(|| sample(black_box(&projector), 100, 1).unwrap())
    });
}

fn oscillatory(c: &mut Criterion) {
    let hbar = 2f64.powi(-12);
    let delta = hbar.powf(0.4);
    let problem =
        StationaryPhaseProblem::new(1, &[1.0], Arc::new(GaussianAmplitude::new(delta)), delta, hbar).unwrap();
    c.bench_function("brute-force oscillatory integral, hbar = 2^-12", |b| {
        b.iter(|| brute_force_oscillatory(black_box(&problem)).unwrap())
    });
}

criterion_group!(benches, spectrum, restricted, poisson_binomial, sampler, oscillatory);
criterion_main!(benches);
