use bottlab::bott_dirac::{interior_spectrum, split_bosonic_fermionic};
use bottlab::eigen::spectrum;
use bottlab::field_theory::{
    commutator_kernel, fermion_field, fermion_field_closed_form, field_from_ladders, field_from_mode_sum,
    free_hamiltonian, gauge_field, gauge_layout, kernel_mode_sum, scalar_field, yang_mills_energy, Sector,
};
use bottlab::holonomy::{ConnectionTerm, GaugeTransformed, Harmonic, TrigTerm};
use bottlab::spectral_basis::ZeroMode;
use bottlab::{
    Connection, FockSpec, LieStructure, ModeBasis, OperatorMatrix, SobolevParams, SolverOptions, TorusGeometry,
    TrigPolynomial, WeightRule, C64,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn torus(d: usize) -> TorusGeometry {
    TorusGeometry::new(d, 2.0 * PI).unwrap()
}

fn scalar_setup(n: usize, nb: usize, tau1: f64, tau2: f64) -> (ModeBasis, FockSpec) {
    let basis = ModeBasis::build(
        torus(1),
        SobolevParams::new(tau1, 1.0).unwrap(),
        n,
        WeightRule::Massive { mass: 1.0 },
        ZeroMode::Include,
    )
    .unwrap();
    let fock = FockSpec::new(n, nb, tau2, basis.weights()).unwrap();
    (basis, fock)
}

fn photon_basis(d: usize, n: usize) -> ModeBasis {
    ModeBasis::build(torus(d), SobolevParams::new(1.0, 1.0).unwrap(), n, WeightRule::Photon { floor: None }, ZeroMode::Exclude)
        .unwrap()
}

/// Lowest eigenvalue of `op` restricted to interior states.
fn interior_min(op: &OperatorMatrix, fock: &FockSpec) -> f64 {
    let (block, _) = op.compress(&fock.interior_mask()).unwrap();
    spectrum(&block, 1).unwrap().eigenvalues()[0]
}

#[test]
fn kernel_diagonal_is_negative_closed_form() {
    let (basis, fock) = scalar_setup(5, 4, 0.5, 1.3);
    for m in [0.0, 0.8, 2.9, 5.5] {
        let k = commutator_kernel(&basis, &fock, &[m], &[m]).unwrap();
        let oracle: f64 = -2.0 * 1.3 * (0..5).map(|i| basis.eval_mode(i, &[m]).unwrap().powi(2)).sum::<f64>();
        assert!(k.matrix.re < 0.0);
        assert!(k.matrix.im.abs() < 1e-14);
        assert!((k.matrix.re - oracle).abs() <= 1e-12);
        assert!((k.mode_sum - oracle).abs() <= 1e-12);
        assert!(k.interior_spread <= 1e-12);
    }
}

#[test]
fn kernel_concentrates_as_tau1_shrinks() {
    let n = 801;
    let mut ratios = Vec::new();
    for tau1 in [1.0, 0.3, 0.1, 0.03, 0.01, 0.003] {
        let basis = ModeBasis::build(
            torus(1),
            SobolevParams::new(tau1, 1.0).unwrap(),
            n,
            WeightRule::Massive { mass: 1.0 },
            ZeroMode::Include,
        )
        .unwrap();
        let diag = kernel_mode_sum(&basis, 1.0, &[0.0], &[0.0]).unwrap();
        let off = kernel_mode_sum(&basis, 1.0, &[0.0], &[1.0]).unwrap();
        ratios.push(diag.abs() / off.abs());
    }
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
}

#[test]
fn gauge_component_counts() {
    let shell = photon_basis(3, 6);
    assert!(shell.modes().iter().all(|m| m.k_norm_sq() == 1));
    let su2 = LieStructure::su2();
    let all = gauge_layout(&shell, &su2, false).unwrap();
    assert_eq!(all.slots.len(), 6 * 3 * 3);
    let one = photon_basis(3, 1);
    let fock = FockSpec::new(9, 2, 1.0, vec![1.0; 9]).unwrap();
    let (a, e) = gauge_field(&one, &fock, &su2, &[0.2, 0.4, 0.6], false).unwrap();
    assert_eq!((a.len(), e.len()), (9, 9));

    let plane = photon_basis(2, 4);
    let layout = gauge_layout(&plane, &LieStructure::u1(), true).unwrap();
    assert_eq!(layout.slots.len(), 4);
    for slot in &layout.slots {
        let k = &plane.modes()[slot.mode].k;
        let dot: f64 = k.iter().zip(&slot.polarization).map(|(&k, p)| k as f64 * p).sum();
        assert!(dot.abs() < 1e-15);
    }
    assert!(gauge_layout(&photon_basis(1, 2), &LieStructure::u1(), true).is_err());
}

#[test]
fn gauge_fields_two_routes_hermitian_and_orthogonal() {
    let basis = photon_basis(2, 1);
    let su2 = LieStructure::su2();
    let fock = FockSpec::new(3, 3, 0.8, vec![1.0; 3]).unwrap();
    let point = [0.7, 1.9];
    let (a, e) = gauge_field(&basis, &fock, &su2, &point, true).unwrap();
    let mask = fock.interior_mask();
    for op in a.iter().chain(&e) {
        let direct = field_from_mode_sum(&fock, &op.coeffs).unwrap();
        assert!(direct.max_abs_diff_on_block(&op.matrix, &mask).unwrap() <= 1e-12);
        assert!(op.matrix.hermiticity_defect() <= 1e-12);
    }
    let gs = fock.ground_state().vector;
    let expect = |x: &OperatorMatrix, y: &OperatorMatrix| -> C64 {
        let yv = y.apply(&gs).unwrap();
        let xyv = x.apply(&yv).unwrap();
        gs.iter().zip(&xyv).map(|(g, v)| g.conj() * v).sum()
    };
    for axis in 0..2 {
        let diag = expect(&a[axis].matrix, &a[axis].matrix);
        for ga in 0..3 {
            for gb in 0..3 {
                let v = expect(&a[ga * 2 + axis].matrix, &a[gb * 2 + axis].matrix);
                let want = if ga == gb { diag } else { C64::new(0.0, 0.0) };
                assert!((v - want).norm() <= 1e-14);
            }
        }
    }
}

#[test]
fn squared_fields_are_positive_on_interior() {
    let (basis, fock) = scalar_setup(3, 4, 1.0, 0.7);
    let (phi, pi) = scalar_field(&basis, &fock, &[1.3]).unwrap();
    for op in [&phi.matrix, &pi.matrix] {
        let sq = op * op;
        assert!(interior_min(&sq, &fock) >= -1e-12);
    }
    let gb = photon_basis(2, 2);
    let gf = FockSpec::new(2, 4, 1.0, gb.weights()).unwrap();
    let (_, e) = gauge_field(&gb, &gf, &LieStructure::u1(), &[0.4, 2.2], true).unwrap();
    for op in &e {
        assert!(interior_min(&(&op.matrix * &op.matrix), &gf) >= -1e-12);
    }
}

#[test]
fn free_hamiltonian_gaps() {
    let (basis, fock) = scalar_setup(1, 6, 1.0, 0.9);
    let h = free_hamiltonian(&basis, &fock, Sector::ScalarMassive { mass: 1.0 }).unwrap();
    let sp = interior_spectrum(&h, &fock.interior_mask(), 4, &SolverOptions::default()).unwrap();
    assert_eq!(sp.eigenvalues()[0], 0.0);
    assert!((sp.gap(1e-9).unwrap() - 2.0 * 0.9).abs() < 1e-12);
    assert!(free_hamiltonian(&basis, &fock, Sector::GaugePhoton).is_err());

    let pb = photon_basis(1, 2);
    let pf = FockSpec::new(2, 4, 1.0, pb.weights()).unwrap();
    let h = free_hamiltonian(&pb, &pf, Sector::GaugePhoton).unwrap();
    let sp = interior_spectrum(&h, &pf.interior_mask(), 6, &SolverOptions::default()).unwrap();
    assert!((sp.gap(1e-9).unwrap() - 2.0).abs() < 1e-12);
    let (bosonic, _) = split_bosonic_fermionic(&pf).unwrap();
    assert_eq!(h.max_abs_diff(&bosonic).unwrap(), 0.0);
}

#[test]
fn fermion_field_matches_closed_form_and_keeps_bosons() {
    let (basis, fock) = scalar_setup(4, 3, 1.0, 1.0);
    let (phi, _) = scalar_field(&basis, &fock, &[0.9]).unwrap();
    let psi = fermion_field(&fock, &phi).unwrap();
    let closed = fermion_field_closed_form(&fock, &phi.coeffs).unwrap();
    assert!(psi.matrix.max_abs_diff_on_block(&closed, &fock.interior_mask()).unwrap() <= 1e-12);
    let mask = fock.interior_mask();
    for (r, c, _) in psi.matrix.triplets().filter(|&(_, c, v)| mask[c] && v.norm() > 1e-12) {
        assert_eq!(fock.decode(r).unwrap().bosons, fock.decode(c).unwrap().bosons);
    }
    let anti = closed.anticommutator(&closed.adjoint()).unwrap();
    let scalar = anti.get(0, 0);
    let target = OperatorMatrix::identity(fock.dim()).scale(scalar);
    assert!(anti.max_abs_diff(&target).unwrap() <= 1e-12);
    let (_, pi) = scalar_field(&basis, &fock, &[0.9]).unwrap();
    assert!(fermion_field(&fock, &pi).is_err());
}

#[test]
fn abelian_curl_energy() {
    let g = torus(2);
    let c = 0.6;
    let conn = Connection::new(
        LieStructure::u1(),
        g,
        vec![ConnectionTerm { generator: 0, axis: 1, k: vec![1, 0], harmonic: Harmonic::Cos, coeff: c }],
    )
    .unwrap();
    let e = yang_mills_energy(&conn, 16).unwrap();
    assert!((e - c * c * PI * PI).abs() <= 1e-12, "{e}");
}

#[test]
fn constant_su2_energy_and_gauge_invariance() {
    let g = torus(2);
    let (t1, t2) = (0.3, 0.7);
    let conn = Connection::new(
        LieStructure::su2(),
        g,
        vec![
            ConnectionTerm { generator: 0, axis: 0, k: vec![0, 0], harmonic: Harmonic::Cos, coeff: -2.0 * t1 },
            ConnectionTerm { generator: 1, axis: 1, k: vec![0, 0], harmonic: Harmonic::Cos, coeff: -2.0 * t2 },
        ],
    )
    .unwrap();
    let closed = 0.5 * (4.0 * t1 * t2).powi(2) * g.volume();
    let e = yang_mills_energy(&conn, 8).unwrap();
    assert!((e - closed).abs() <= 1e-12 * closed, "{e} vs {closed}");

    let alpha = TrigPolynomial::new(
        g,
        vec![
            TrigTerm { k: vec![1, 0], harmonic: Harmonic::Cos, coeff: 0.7 },
            TrigTerm { k: vec![0, 1], harmonic: Harmonic::Sin, coeff: -0.4 },
        ],
    )
    .unwrap();
    let x = LieStructure::su2().generator(2).unwrap().clone();
    let gt = GaugeTransformed::new(&conn, alpha, x).unwrap();
    let moved = yang_mills_energy(&gt, 64).unwrap();
    assert!((moved - closed).abs() <= 1e-8, "{moved} vs {closed}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scalar_routes_and_hermiticity(m in 0.0f64..6.3, n in 1usize..4, tau2 in 0.3f64..2.0) {
        let (basis, fock) = scalar_setup(n, 4, 1.0, tau2);
        let (phi, pi) = scalar_field(&basis, &fock, &[m]).unwrap();
        let mask = fock.interior_mask();
        for op in [&phi, &pi] {
            let direct = field_from_mode_sum(&fock, &op.coeffs).unwrap();
            let ladder = field_from_ladders(&fock, &op.coeffs).unwrap();
            prop_assert!(direct.max_abs_diff_on_block(&ladder, &mask).unwrap() <= 1e-12);
            prop_assert!(op.matrix.hermiticity_defect() <= 1e-12);
        }
    }

    #[test]
    fn kernel_is_translation_invariant(m in 0.0f64..6.3, mp in 0.0f64..6.3, delta in -3.0f64..3.0) {
        let (basis, fock) = scalar_setup(7, 2, 1.0, 1.0);
        let k0 = commutator_kernel(&basis, &fock, &[m], &[mp]).unwrap();
        let k1 = kernel_mode_sum(&basis, 1.0, &[m + delta], &[mp + delta]).unwrap();
        prop_assert!((k0.matrix.re - k0.mode_sum).abs() <= 1e-10);
        prop_assert!((k1 - k0.mode_sum).abs() <= 1e-10);
    }
}
