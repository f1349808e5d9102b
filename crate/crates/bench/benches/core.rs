use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use l2tor_core::anomaly::{anomaly_coefficients, ConformalFamily};
use l2tor_core::heat::{boundary_insensitivity_check, kernel_1d, Domain1D, HeatGrid};
use l2tor_core::hyperbolic::{torsion_constant, PlancherelTable};
use l2tor_core::sdf::{run_suite, Suite};
use l2tor_core::zeta::{zeta_det, zeta_det_spectrum, CircleTrace, Spectrum};

fn zeta(c: &mut Criterion) {
    let circle = CircleTrace::new(5.0).unwrap();
    c.bench_function("zeta_det circle", |b| b.iter(|| zeta_det(black_box(&circle)).unwrap()));
    let s = Spectrum::new((1..=64).map(|k| (k as f64 * 0.37, 1.0)).collect()).unwrap();
    c.bench_function("zeta_det 64 eigenvalues", |b| b.iter(|| zeta_det_spectrum(black_box(&s)).unwrap()));
}

fn hyperbolic(c: &mut Criterion) {
    let table = PlancherelTable::h3();
    let mut g = c.benchmark_group("hyperbolic");
    g.sample_size(10);
    g.bench_function("torsion_constant H3", |b| b.iter(|| torsion_constant(black_box(&table), 1e-10).unwrap()));
    g.finish();
}

fn heat(c: &mut Criterion) {
    let d = Domain1D::IntervalNeumann { length: 2.0 };
    c.bench_function("kernel_1d interval", |b| b.iter(|| kernel_1d(&d, black_box(0.3), 0.4, 1.1).unwrap()));
    let grid = HeatGrid::default();
    let mut g = c.benchmark_group("heat");
    g.sample_size(10);
    g.bench_function("boundary check half-line", |b| {
        b.iter(|| boundary_insensitivity_check(&Domain1D::HalfLineNeumann, &Domain1D::Line, 1.0, &grid).unwrap())
    });
    g.finish();
}

fn sdf(c: &mut Criterion) {
    let mut g = c.benchmark_group("sdf");
    g.sample_size(10);
    for suite in [Suite::Basic, Suite::ShortExact, Suite::Laplacian] {
        g.bench_function(format!("run_suite {suite} x20"), |b| b.iter(|| run_suite(suite, 7, 20, 6).unwrap()));
    }
    g.finish();
}

fn anomaly(c: &mut Criterion) {
    let fam = ConformalFamily::preset(3).unwrap();
    c.bench_function("anomaly dim 3", |b| b.iter(|| anomaly_coefficients(&fam, black_box(0.5)).unwrap()));
}

criterion_group!(benches, zeta, hyperbolic, heat, sdf, anomaly);
criterion_main!(benches);
