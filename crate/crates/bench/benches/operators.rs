use std::f64::consts::PI;

use bottlab::bott_dirac::{assemble_b, interior_spectrum, square_b};
use bottlab::fluctuations::fluct_spectrum;
use bottlab::gaussian_measure::expectation_ground;
use bottlab::holonomy::{holonomy_along_flow, ConnectionTerm, Harmonic};
use bottlab::spectral_basis::ZeroMode;
use bottlab::{
    Connection, FlowSpec, FluctuationSpec, FockSpec, LieStructure, ModeBasis, QuadratureSpec, SobolevParams,
    SolverOptions, SquareRoute, TestFunction, ThetaRecipe, TorusGeometry, VectorField, WeightRule,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn fock(n: usize, nb: usize) -> FockSpec {
    FockSpec::new(n, nb, 1.0, (1..=n).map(|k| 1.0 / k as f64).collect()).unwrap()
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for (n, nb) in [(2, 8), (3, 6), (4, 4)] {
        let spec = fock(n, nb);
        g.bench_with_input(BenchmarkId::new("b", format!("{n}x{nb}")), &spec, |b, s| {
            b.iter(|| assemble_b(black_box(s)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("square_matrix", format!("{n}x{nb}")), &spec, |b, s| {
            b.iter(|| square_b(black_box(s), SquareRoute::MatrixSquare).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("square_analytic", format!("{n}x{nb}")), &spec, |b, s| {
            b.iter(|| square_b(black_box(s), SquareRoute::Analytic).unwrap())
        });
    }
    g.finish();
}

fn spectra(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let spec = fock(3, 5);
    let sq = square_b(&spec, SquareRoute::Analytic).unwrap();
    let mask = spec.interior_mask();
    c.bench_function("interior_spectrum_3x5", |b| {
        b.iter(|| interior_spectrum(black_box(&sq), &mask, 8, &opts).unwrap())
    });
    let fl = FluctuationSpec::new(ThetaRecipe::PositionMomentum { mode: 0, power: 2 }, true, 0.3).unwrap();
    let small = fock(2, 6);
    c.bench_function("fluct_spectrum_xp2_2x6", |b| {
        b.iter(|| fluct_spectrum(black_box(&fl), &small, 6, &opts).unwrap())
    });
}

fn measure(c: &mut Criterion) {
    let basis = ModeBasis::build(
        TorusGeometry::new(1, 2.0 * PI).unwrap(),
        SobolevParams::new(1.0, 1.0).unwrap(),
        9,
        WeightRule::Massive { mass: 1.0 },
        ZeroMode::Include,
    )
    .unwrap();
    let spec = FockSpec::new(basis.len(), 2, 1.0, basis.weights()).unwrap();
    let f = TestFunction::polynomial(vec![1.0, 0.0, 1.0]).unwrap();
    let mut g = c.benchmark_group("expectation");
    for (name, quad) in [
        ("gh40", QuadratureSpec::GaussHermite { order: 40 }),
        ("mc4096", QuadratureSpec::MonteCarlo { samples: 4096, seed: Some(1) }),
    ] {
        g.bench_function(name, |b| b.iter(|| expectation_ground(&basis, &spec, &f, black_box(&[0.4]), quad).unwrap()));
    }
    g.finish();
}

fn holonomy(c: &mut Criterion) {
    let torus = TorusGeometry::new(2, 2.0 * PI).unwrap();
    let terms = (0..6)
        .map(|j| ConnectionTerm {
            generator: j % 3,
            axis: j % 2,
            k: vec![1 + (j % 2) as i32, (j / 2 % 2) as i32],
            harmonic: if j % 2 == 0 { Harmonic::Cos } else { Harmonic::Sin },
            coeff: 0.3 + 0.1 * j as f64,
        })
        .collect();
    let conn = Connection::new(LieStructure::su2(), torus, terms).unwrap();
    let flow = FlowSpec::new(VectorField::constant(torus, &[1.0, 0.5]).unwrap(), 2.0 * PI, vec![0.1, 0.2]).unwrap();
    let mut g = c.benchmark_group("holonomy_su2");
    for steps in [64, 256, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, &s| {
            b.iter(|| holonomy_along_flow(&conn, black_box(&flow), s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, operators, spectra, measure, holonomy);
criterion_main!(benches);
