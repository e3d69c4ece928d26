use bottlab::bott_dirac::{
    assemble_b, dirac_total, dirac_total_interior_mask, fermion_ladders, grading, interior_spectrum,
    intertwiner_violation, intertwiner_violation_with, mode_ladders, split_bosonic_fermionic, square_b,
};
use bottlab::clifford_fock::car_violation;
use bottlab::eigen::spectrum;
use bottlab::{FermionSpace, FockSpec, OperatorMatrix, SolverOptions, SquareRoute, StateIndex, C64};
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..4.0, 1..=3)
}

/// Sorted `sum_i 2 tau2 s_i (n_i + f_i)` over levels `n_i < levels`.
fn occupation_energies(s: &[f64], levels: usize, tau2: f64) -> Vec<f64> {
    let n = s.len();
    let mut out = Vec::new();
    for code in 0..(levels.pow(n as u32) << n) {
        let mut rest = code >> n;
        let mut e = 0.0;
        for (i, si) in s.iter().enumerate() {
            e += 2.0 * tau2 * si * ((rest % levels) as f64 + (code >> i & 1) as f64);
            rest /= levels;
        }
        out.push(e);
    }
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn corrupted_sign_is_caught() {
    let f = FermionSpace::new(2).unwrap();
    let mut pairs: Vec<_> = (0..2).map(|i| f.ext_int(i).unwrap()).collect();
    let flip = |m: &OperatorMatrix| {
        OperatorMatrix::from_triplets(m.dim(), m.triplets().map(|(r, c, v)| (r, c, C64::new(v.norm(), 0.0))).collect())
            .unwrap()
    };
    assert_eq!(car_violation(&pairs).unwrap(), 0.0);
    pairs[1] = (flip(&pairs[1].0), flip(&pairs[1].1));
    assert!(car_violation(&pairs).unwrap() >= 1.0);
}

#[test]
fn car_and_clifford_up_to_eight_modes() {
    assert_eq!(FermionSpace::new(1).unwrap().check_car().unwrap(), 0.0);
    for n in 1..=8 {
        let f = FermionSpace::new(n).unwrap();
        assert!(f.check_car().unwrap() <= 1e-13);
        assert!(f.check_clifford().unwrap() <= 1e-13);
    }
}

#[test]
fn creation_raises_degree_by_one() {
    let f = FermionSpace::new(4).unwrap();
    let num = f.number_operator(&[1.0; 4]).unwrap();
    for i in 0..4 {
        let (ext, int) = f.ext_int(i).unwrap();
        assert_eq!((&ext * &ext).nnz(), 0);
        assert_eq!((&int * &int).nnz(), 0);
        for (r, c, _) in ext.triplets() {
            assert_eq!(num.get(r, r).re, num.get(c, c).re + 1.0);
        }
    }
}

#[test]
fn documented_spectra() {
    let one = FockSpec::new(1, 12, 1.0, vec![1.0]).unwrap();
    let sq = square_b(&one, SquareRoute::MatrixSquare).unwrap();
    let sp = interior_spectrum(&sq, &one.interior_mask(), 5, &SolverOptions::default()).unwrap();
    for (a, b) in sp.eigenvalues().iter().zip([0.0, 2.0, 2.0, 4.0, 4.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    let two = FockSpec::new(2, 6, 1.0, vec![1.0, 2.0]).unwrap();
    let sq = square_b(&two, SquareRoute::MatrixSquare).unwrap();
    let sp = interior_spectrum(&sq, &two.interior_mask(), 6, &SolverOptions::default()).unwrap();
    assert!((sp.gap(1e-9).unwrap() - 2.0).abs() < 1e-12);
    let id = spectrum(&OperatorMatrix::identity(5), 3).unwrap().eigenvalues();
    assert_eq!(id, vec![1.0, 1.0, 1.0]);
}

#[test]
fn documented_intertwiner_cases() {
    assert!(intertwiner_violation(&FockSpec::new(1, 8, 1.0, vec![1.0]).unwrap()).unwrap() <= 1e-12);
    let mixed = FockSpec::new(3, 5, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
    assert!(intertwiner_violation(&mixed).unwrap() <= 1e-12);
    assert!(intertwiner_violation_with(&mixed, &[1.0, 2.5, 3.0]).unwrap() >= 0.1);
}

#[test]
fn dirac_total_documented_levels() {
    let fock = FockSpec::new(1, 8, 1.0, vec![1.0]).unwrap();
    let dt = dirac_total(&fock, &[1, -1]).unwrap();
    let sq = &dt * &dt;
    let sp = interior_spectrum(&sq, &dirac_total_interior_mask(&fock, 2), 6, &SolverOptions::default()).unwrap();
    for (a, b) in sp.eigenvalues().iter().zip([1.0, 1.0, 3.0, 3.0, 3.0, 3.0]) {
        assert!((a - b).abs() < 1e-12, "{:?}", sp.eigenvalues());
    }
}

#[test]
fn eigenvalue_count_below_threshold_is_finite_and_stable() {
    // s strictly increasing: adding modes only adds states above the threshold
    let s = [1.0, 2.5, 4.0, 6.0];
    let mut counts = Vec::new();
    for n in 1..=4 {
        let fock = FockSpec::new(n, 8, 1.0, s[..n].to_vec()).unwrap();
        let sq = square_b(&fock, SquareRoute::MatrixSquare).unwrap();
        let sp = interior_spectrum(&sq, &fock.interior_mask(), 40, &SolverOptions::default()).unwrap();
        let below = sp.eigenvalues().iter().filter(|&&e| e < 10.0).count();
        assert!(below < sp.eigenvalues().len(), "threshold not resolved at n={n}");
        counts.push(below);
    }
    let oracle: Vec<usize> = (1..=4)
        .map(|n| occupation_energies(&s[..n], 7, 1.0).iter().filter(|&&e| e < 10.0).count())
        .collect();
    assert_eq!(counts, oracle);
    assert!(counts.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn nonzero_levels_pair_up() {
    for (s, nb) in [(vec![1.0], 6), (vec![1.0, 1.7], 4), (vec![0.6, 1.1, 2.3], 3)] {
        let fock = FockSpec::new(s.len(), nb, 1.0, s).unwrap();
        let sq = square_b(&fock, SquareRoute::MatrixSquare).unwrap();
        let mut ev: Vec<f64> = sq.diagonal().iter().map(|v| v.re).collect();
        assert_eq!(sq.nnz(), ev.iter().filter(|v| **v != 0.0).count(), "square must be diagonal");
        ev.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < ev.len() {
            let mut j = i;
            while j < ev.len() && (ev[j] - ev[i]).abs() < 1e-9 {
                j += 1;
            }
            if ev[i].abs() > 1e-9 {
                assert_eq!((j - i) % 2, 0, "odd multiplicity at {}", ev[i]);
            }
            i = j;
        }
    }
}

#[test]
fn ground_state_shape() {
    let fock = FockSpec::new(3, 4, 1.3, vec![0.5, 1.0, 2.0]).unwrap();
    let gs = fock.ground_state().vector;
    assert_eq!(gs.len(), 4usize.pow(3) * 8);
    assert_eq!(gs[0], C64::new(1.0, 0.0));
    assert!(gs[1..].iter().all(|v| *v == C64::new(0.0, 0.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn b_is_hermitian_and_kills_ground_state(s in weights(), nb in 2usize..8, tau2 in 0.2f64..3.0) {
        let fock = FockSpec::new(s.len(), nb, tau2, s).unwrap();
        let b = assemble_b(&fock).unwrap();
        prop_assert!(b.hermiticity_defect() <= 1e-13);
        let r = b.apply(&fock.ground_state().vector).unwrap();
        prop_assert!(r.iter().map(|v| v.norm()).fold(0.0, f64::max) <= 1e-13);
        prop_assert!(b.anticommutator(&grading(&fock).unwrap()).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn square_routes_agree_on_interior(s in weights(), nb in 3usize..8, tau2 in 0.2f64..3.0) {
        let fock = FockSpec::new(s.len(), nb, tau2, s).unwrap();
        let mask = fock.interior_mask();
        let m = square_b(&fock, SquareRoute::MatrixSquare).unwrap();
        let a = square_b(&fock, SquareRoute::Analytic).unwrap();
        let scale = 1.0 + a.max_abs();
        prop_assert!(m.max_abs_diff_on_block(&a, &mask).unwrap() <= 1e-13 * scale);
        let (bb, bf) = split_bosonic_fermionic(&fock).unwrap();
        let sum = bb.axpy(C64::new(fock.tau2(), 0.0), &bf).unwrap();
        prop_assert!(sum.max_abs_diff(&a).unwrap() == 0.0);
    }

    #[test]
    fn interior_spectrum_follows_occupations(s in weights(), nb in 3usize..6, tau2 in 0.3f64..2.0) {
        let fock = FockSpec::new(s.len(), nb, tau2, s.clone()).unwrap();
        let sq = square_b(&fock, SquareRoute::MatrixSquare).unwrap();
        let count = 8.min(fock.dim());
        let sp = interior_spectrum(&sq, &fock.interior_mask(), count, &SolverOptions::default()).unwrap();
        let oracle = occupation_energies(&s, nb - 1, tau2);
        for (g, w) in sp.eigenvalues().iter().zip(&oracle) {
            prop_assert!((g - w).abs() <= 1e-9 * w.max(1.0), "{} vs {}", g, w);
        }
    }

    #[test]
    fn intertwiners_hold_on_interior(s in weights(), nb in 3usize..7, tau2 in 0.2f64..3.0) {
        let fock = FockSpec::new(s.len(), nb, tau2, s).unwrap();
        prop_assert!(intertwiner_violation(&fock).unwrap() <= 1e-12);
    }

    #[test]
    fn ladder_commutator_is_two_tau2(nb in 3usize..9, tau2 in 0.2f64..3.0, s in 0.3f64..3.0) {
        let fock = FockSpec::new(2, nb, tau2, vec![s, 1.0]).unwrap();
        let l = mode_ladders(&fock, 0).unwrap();
        let comm = l.q.commutator(&l.qdag).unwrap();
        let target = OperatorMatrix::identity(fock.dim()).scale_real(2.0 * tau2);
        let mask = fock.interior_mask();
        prop_assert!(comm.max_abs_diff_on_columns(&target, &mask).unwrap() <= 1e-12 * tau2.max(1.0));
        let (ad, a) = fermion_ladders(&fock, 0).unwrap();
        prop_assert!(a.anticommutator(&ad).unwrap().max_abs_diff(&OperatorMatrix::identity(fock.dim())).unwrap() == 0.0);
    }

    #[test]
    fn state_codec_round_trips(index in 0usize..(5usize.pow(3) * 8)) {
        let fock = FockSpec::new(3, 5, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let st: StateIndex = fock.decode(index).unwrap();
        prop_assert_eq!(fock.encode(&st).unwrap(), index);
    }

    #[test]
    fn fermion_codec_round_trips(n in 1usize..10, raw in any::<u32>()) {
        let f = FermionSpace::new(n).unwrap();
        let idx = raw as usize % f.dim();
        let occ = f.decode(idx).unwrap();
        prop_assert_eq!(f.encode(&occ).unwrap(), idx);
    }
}
