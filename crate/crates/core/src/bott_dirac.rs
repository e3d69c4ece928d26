//! Truncated Bott-Dirac operator on `(C^Nb)^{⊗n} ⊗ Λ*R^n`.
//!
//! Flat index layout: `boson_index * 2^n + fermion_bits`, with
//! `boson_index = sum_i n_i Nb^i`. Each bosonic mode is represented in its own
//! oscillator eigenbasis, so `q_i |k> = sqrt(2 tau2 k) |k-1>` and the ground
//! state is the basis vector at index 0.

use nalgebra::DMatrix;

use crate::clifford_fock::{creation_entries, FermionSpace};
use crate::eigen::{self, SolverOptions, Spectrum};
use crate::error::{check_index, check_len, invalid, Error, Result};
use crate::operator::{OperatorMatrix, Symmetry, C64, ONE, ZERO};

/// Largest total dimension `Nb^n 2^n` accepted.
pub const MAX_FOCK_DIM: usize = 1 << 24;

/// Top-level weight below which an eigenvector counts as interior.
pub const INTERIOR_WEIGHT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FockSpec {
    n: usize,
    nb: usize,
    tau2: f64,
    s: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateIndex {
    pub bosons: Vec<usize>,
    /// Occupation bit-set, mode `i` on bit `i`.
    pub fermions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub vector: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareRoute {
    /// `B * B` of the assembled matrix.
    MatrixSquare,
    /// `sum_i s_i (q_i^dag q_i + 2 tau2 a_i^dag a_i)` assembled directly.
    Analytic,
}

impl std::str::FromStr for SquareRoute {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix_square" | "matrix-square" => Ok(SquareRoute::MatrixSquare),
            "analytic" => Ok(SquareRoute::Analytic),
            other => Err(invalid("route", format!("unknown square route `{other}`"))),
        }
    }
}

/// Position-space ladder data for one mode, lifted to the full space.
#[derive(Clone, Debug)]
pub struct Ladders {
    pub q: OperatorMatrix,
    pub qdag: OperatorMatrix,
    pub x: OperatorMatrix,
    pub d: OperatorMatrix,
}

impl FockSpec {
    pub fn new(n: usize, nb: usize, tau2: f64, s: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one mode"));
        }
        if nb < 2 {
            return Err(invalid("Nb", format!("bosonic cutoff {nb} must be at least 2")));
        }
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(invalid("tau2", format!("{tau2} must be positive")));
        }
        check_len(n, s.len())?;
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(invalid("s", format!("weight {bad} must be positive")));
        }
        let total = (nb as u128).checked_pow(n as u32).and_then(|b| b.checked_mul(1u128 << n.min(100)));
        match total {
            Some(t) if t <= MAX_FOCK_DIM as u128 => {}
            other => {
                return Err(Error::Capacity {
                    what: "Fock dimension",
                    requested: other.unwrap_or(u128::MAX),
                    cap: MAX_FOCK_DIM as u128,
                })
            }
        }
        Ok(FockSpec { n, nb, tau2, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn with_cutoff(&self, nb: usize) -> Result<FockSpec> {
        FockSpec::new(self.n, nb, self.tau2, self.s.clone())
    }

    pub fn fermion_dim(&self) -> usize {
        1 << self.n
    }

    pub fn boson_dim(&self) -> usize {
        self.nb.pow(self.n as u32)
    }

    pub fn dim(&self) -> usize {
        self.boson_dim() * self.fermion_dim()
    }

    pub fn fermions(&self) -> FermionSpace {
        FermionSpace::new(self.n).expect("mode count validated")
    }

    pub fn encode(&self, state: &StateIndex) -> Result<usize> {
        check_len(self.n, state.bosons.len())?;
        check_index(state.fermions, self.fermion_dim())?;
        let mut b = 0;
        for &k in state.bosons.iter().rev() {
            check_index(k, self.nb)?;
            b = b * self.nb + k;
        }
        Ok(b * self.fermion_dim() + state.fermions)
    }

    pub fn decode(&self, index: usize) -> Result<StateIndex> {
        check_index(index, self.dim())?;
        let fermions = index & (self.fermion_dim() - 1);
        let mut b = index >> self.n;
        let mut bosons = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            bosons.push(b % self.nb);
            b /= self.nb;
        }
        Ok(StateIndex { bosons, fermions })
    }

    /// Occupation of mode `i` in the state at flat index `index`.
    pub(crate) fn level(&self, index: usize, i: usize) -> usize {
        ((index >> self.n) / self.nb.pow(i as u32)) % self.nb
    }

    /// True on states where every bosonic level is below `Nb - 1`.
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.dim())
            .map(|idx| (0..self.n).all(|i| self.level(idx, i) + 1 < self.nb))
            .collect()
    }

    /// Squared weight of `v` on states with some mode at the top level.
    pub fn top_level_weight(&self, v: &[C64]) -> f64 {
        let mask = self.interior_mask();
        v.iter().zip(&mask).filter(|(_, &m)| !m).map(|(x, _)| x.norm_sqr()).sum()
    }

    pub fn ground_state(&self) -> GroundState {
        let mut vector = vec![ZERO; self.dim()];
        vector[0] = ONE;
        GroundState { vector }
    }

    /// `sum_i 2 tau2 s_i (n_i + f_i)`, the `B^2` eigenvalue of a basis state.
    pub fn occupation_energy(&self, state: &StateIndex) -> f64 {
        (0..self.n)
            .map(|i| {
                let f = (state.fermions >> i & 1) as f64;
                2.0 * self.tau2 * self.s[i] * (state.bosons[i] as f64 + f)
            })
            .sum()
    }
}

/// Single-mode annihilator on levels `0..nb`.
pub fn ladder_matrix(nb: usize, tau2: f64) -> DMatrix<C64> {
    let mut q = DMatrix::from_element(nb, nb, ZERO);
    for k in 1..nb {
        q[(k - 1, k)] = C64::new((2.0 * tau2 * k as f64).sqrt(), 0.0);
    }
    q
}

/// `bop` on mode `mode` tensored with `fop` on the fermionic factor; either
/// factor defaults to the identity.
pub fn lift(spec: &FockSpec, boson: Option<(usize, &DMatrix<C64>)>, fop: Option<&OperatorMatrix>) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_triplets(spec.dim(), lift_entries(spec, boson, fop)?)?)
}

pub(crate) fn lift_entries(
    spec: &FockSpec,
    boson: Option<(usize, &DMatrix<C64>)>,
    fop: Option<&OperatorMatrix>,
) -> Result<Vec<(usize, usize, C64)>> {
    let fd = spec.fermion_dim();
    if let Some(f) = fop {
        if f.dim() != fd {
            return Err(Error::DimensionMismatch { left: f.dim(), right: fd });
        }
    }
    let mut fcols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); fd];
    match fop {
        Some(f) => {
            for (r, c, v) in f.triplets() {
                fcols[c].push((r, v));
            }
        }
        None => {
            for (c, col) in fcols.iter_mut().enumerate() {
                col.push((c, ONE));
            }
        }
    }
    let (mode, stride, bcols) = match boson {
        Some((i, m)) => {
            check_index(i, spec.n)?;
            if m.nrows() != spec.nb || m.ncols() != spec.nb {
                return Err(Error::DimensionMismatch { left: m.nrows(), right: spec.nb });
            }
            let cols: Vec<Vec<(usize, C64)>> = (0..spec.nb)
                .map(|c| (0..spec.nb).filter(|&r| m[(r, c)] != ZERO).map(|r| (r, m[(r, c)])).collect())
                .collect();
            (Some(i), spec.nb.pow(i as u32) * fd, cols)
        }
        None => (None, 0, Vec::new()),
    };
    let mut out = Vec::new();
    for idx in 0..spec.dim() {
        let f = idx & (fd - 1);
        let base = idx - f;
        match mode {
            Some(i) => {
                let k = spec.level(idx, i);
                let cleared = base - k * stride;
                for &(r, bv) in &bcols[k] {
                    for &(fr, fv) in &fcols[f] {
                        out.push((cleared + r * stride + fr, idx, bv * fv));
                    }
                }
            }
            None => {
                for &(fr, fv) in &fcols[f] {
                    out.push((base + fr, idx, fv));
                }
            }
        }
    }
    Ok(out)
}

pub fn mode_ladders(spec: &FockSpec, i: usize) -> Result<Ladders> {
    check_index(i, spec.n)?;
    let q1 = ladder_matrix(spec.nb, spec.tau2);
    let qd1 = q1.adjoint();
    let rs = spec.s[i].sqrt();
    let x1 = (&q1 + &qd1) * C64::new(0.5 / rs, 0.0);
    let d1 = (&q1 - &qd1) * C64::new(rs / (2.0 * spec.tau2), 0.0);
    Ok(Ladders {
        q: lift(spec, Some((i, &q1)), None)?,
        qdag: lift(spec, Some((i, &qd1)), None)?,
        x: lift(spec, Some((i, &x1)), None)?.with_symmetry(Symmetry::Hermitian),
        d: lift(spec, Some((i, &d1)), None)?.with_symmetry(Symmetry::AntiHermitian),
    })
}

/// `(a_i^dag, a_i)` on the full space.
pub fn fermion_ladders(spec: &FockSpec, i: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (e, a) = spec.fermions().ext_int(i)?;
    Ok((lift(spec, None, Some(&e))?, lift(spec, None, Some(&a))?))
}

/// `B = sum_i sqrt(s_i) (q_i^dag a_i + q_i a_i^dag)`.
pub fn assemble_b(spec: &FockSpec) -> Result<OperatorMatrix> {
    let fd = spec.fermion_dim();
    let q1 = ladder_matrix(spec.nb, spec.tau2);
    let mut t = Vec::new();
    for i in 0..spec.n {
        let rs = C64::new(spec.s[i].sqrt(), 0.0);
        let ext = OperatorMatrix::from_triplets(fd, creation_entries(i, fd))?;
        let int = ext.adjoint();
        let qd = q1.adjoint() * rs;
        let q = &q1 * rs;
        t.extend(lift_entries(spec, Some((i, &qd)), Some(&int))?);
        t.extend(lift_entries(spec, Some((i, &q)), Some(&ext))?);
    }
    Ok(OperatorMatrix::from_triplets(spec.dim(), t)?.with_symmetry(Symmetry::Hermitian))
}

pub fn square_b(spec: &FockSpec, route: SquareRoute) -> Result<OperatorMatrix> {
    match route {
        SquareRoute::MatrixSquare => {
            let b = assemble_b(spec)?;
            Ok((&b * &b).with_symmetry(Symmetry::Hermitian))
        }
        SquareRoute::Analytic => {
            let (bb, bf) = split_bosonic_fermionic(spec)?;
            Ok(bb.axpy(C64::new(spec.tau2, 0.0), &bf)?.with_symmetry(Symmetry::Hermitian))
        }
    }
}

/// `(B^2|_b, B^2|_f) = (sum s_i q_i^dag q_i, 2 sum s_i a_i^dag a_i)`, so the
/// analytic square is `Bb + tau2 Bf`.
pub fn split_bosonic_fermionic(spec: &FockSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let fd = spec.fermion_dim();
    let mut bb = vec![0.0; spec.dim()];
    let mut bf = vec![0.0; spec.dim()];
    for (idx, (b, f)) in bb.iter_mut().zip(bf.iter_mut()).enumerate() {
        let bits = idx & (fd - 1);
        for i in 0..spec.n {
            *b += spec.s[i] * 2.0 * spec.tau2 * spec.level(idx, i) as f64;
            *f += 2.0 * spec.s[i] * (bits >> i & 1) as f64;
        }
    }
    Ok((OperatorMatrix::from_real_diagonal(&bb), OperatorMatrix::from_real_diagonal(&bf)))
}

/// `sum_i d_i^2` built from single-mode products.
pub fn laplacian(spec: &FockSpec) -> Result<OperatorMatrix> {
    let q1 = ladder_matrix(spec.nb, spec.tau2);
    let mut t = Vec::new();
    for i in 0..spec.n {
        let d1 = (&q1 - q1.adjoint()) * C64::new(spec.s[i].sqrt() / (2.0 * spec.tau2), 0.0);
        t.extend(lift_entries(spec, Some((i, &(&d1 * &d1))), None)?);
    }
    OperatorMatrix::from_triplets(spec.dim(), t)
}

/// The second-order form with a single power of `tau2` on the Laplacian:
/// `sum_i (-tau2 d_i^2 + s_i^2 x_i^2) + 2 tau2 N - tau2 sum_i s_i`.
/// Equals the true square only at `tau2 = 1`.
pub fn printed_square(spec: &FockSpec) -> Result<OperatorMatrix> {
    second_order_form(spec, spec.tau2)
}

/// The same form with `-tau2^2 d^2`, which is the true square for every `tau2`.
pub fn second_order_square(spec: &FockSpec) -> Result<OperatorMatrix> {
    second_order_form(spec, spec.tau2 * spec.tau2)
}

fn second_order_form(spec: &FockSpec, laplace_coeff: f64) -> Result<OperatorMatrix> {
    let q1 = ladder_matrix(spec.nb, spec.tau2);
    let fd = spec.fermion_dim();
    let mut t = Vec::new();
    for i in 0..spec.n {
        let s = spec.s[i];
        let x1 = (&q1 + q1.adjoint()) * C64::new(0.5 / s.sqrt(), 0.0);
        let d1 = (&q1 - q1.adjoint()) * C64::new(s.sqrt() / (2.0 * spec.tau2), 0.0);
        let single = (&d1 * &d1) * C64::new(-laplace_coeff, 0.0) + (&x1 * &x1) * C64::new(s * s, 0.0);
        t.extend(lift_entries(spec, Some((i, &single)), None)?);
    }
    let shift: f64 = spec.tau2 * spec.s.iter().sum::<f64>();
    for idx in 0..spec.dim() {
        let bits = idx & (fd - 1);
        let num: f64 = (0..spec.n).filter(|&i| bits >> i & 1 == 1).map(|i| spec.s[i]).sum();
        t.push((idx, idx, C64::new(2.0 * spec.tau2 * num - shift, 0.0)));
    }
    Ok(OperatorMatrix::from_triplets(spec.dim(), t)?.with_symmetry(Symmetry::Hermitian))
}

/// Max interior violation of
/// `{B, a_i} = sqrt(s_i) q_i`, `{B, a_i^dag} = sqrt(s_i) q_i^dag`,
/// `[B, q_i] = -2 tau2 sqrt(s_i) a_i`, `[B, q_i^dag] = 2 tau2 sqrt(s_i) a_i^dag`.
pub fn intertwiner_violation(spec: &FockSpec) -> Result<f64> {
    intertwiner_violation_with(spec, &spec.s)
}

/// As [`intertwiner_violation`] but with `rhs_weights` on the right-hand sides.
pub fn intertwiner_violation_with(spec: &FockSpec, rhs_weights: &[f64]) -> Result<f64> {
    check_len(spec.n, rhs_weights.len())?;
    let b = assemble_b(spec)?;
    let mask = spec.interior_mask();
    let mut worst: f64 = 0.0;
    for i in 0..spec.n {
        let l = mode_ladders(spec, i)?;
        let (ad, a) = fermion_ladders(spec, i)?;
        let rs = rhs_weights[i].sqrt();
        let tw = 2.0 * spec.tau2 * rs;
        let checks = [
            (b.anticommutator(&a)?, l.q.scale_real(rs)),
            (b.anticommutator(&ad)?, l.qdag.scale_real(rs)),
            (b.commutator(&l.q)?, a.scale_real(-tw)),
            (b.commutator(&l.qdag)?, ad.scale_real(tw)),
        ];
        for (lhs, rhs) in checks {
            worst = worst.max(lhs.max_abs_diff_on_columns(&rhs, &mask)?);
        }
    }
    Ok(worst)
}

/// Fermion parity `(-1)^F` on the full space.
pub fn grading(spec: &FockSpec) -> Result<OperatorMatrix> {
    let g = spec.fermions().parity();
    lift(spec, None, Some(&g)).map(|m| m.with_symmetry(Symmetry::Hermitian))
}

/// `B ⊗ 1 + gamma ⊗ diag(spatial_modes)`, spatial index fastest.
pub fn dirac_total(spec: &FockSpec, spatial_modes: &[i64]) -> Result<OperatorMatrix> {
    if spatial_modes.is_empty() {
        return Err(invalid("spatial_modes", "need at least one spatial mode"));
    }
    let m = spatial_modes.len();
    let b = assemble_b(spec)?;
    let gamma = grading(spec)?;
    if b.anticommutator(&gamma)?.max_abs() > 0.0 {
        return Err(Error::Internal("grading does not anticommute with B".into()));
    }
    let spatial = OperatorMatrix::from_real_diagonal(&spatial_modes.iter().map(|&k| k as f64).collect::<Vec<_>>());
    let left = OperatorMatrix::kron(&b, &OperatorMatrix::identity(m));
    let right = OperatorMatrix::kron(&gamma, &spatial);
    let cross = left.anticommutator(&right)?.max_abs();
    if cross > 1e-13 {
        return Err(Error::Internal(format!("cross terms do not cancel ({cross:e})")));
    }
    Ok(left.try_add(&right)?.with_symmetry(Symmetry::Hermitian))
}

/// Interior mask on the space of [`dirac_total`].
pub fn dirac_total_interior_mask(spec: &FockSpec, spatial_len: usize) -> Vec<bool> {
    spec.interior_mask()
        .into_iter()
        .flat_map(|m| std::iter::repeat_n(m, spatial_len))
        .collect()
}

/// Lowest `count` eigenpairs whose eigenvectors carry at most
/// [`INTERIOR_WEIGHT_TOL`] weight outside `interior`.
pub fn interior_spectrum(op: &OperatorMatrix, interior: &[bool], count: usize, opts: &SolverOptions) -> Result<Spectrum> {
    check_len(op.dim(), interior.len())?;
    eigen::spectrum_filtered(op, count, opts, |pair| {
        pair.vector
            .indices
            .iter()
            .zip(&pair.vector.values)
            .filter(|(&i, _)| !interior[i])
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            <= INTERIOR_WEIGHT_TOL
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::norm;
    use proptest::prelude::*;

    fn spec(n: usize, nb: usize, tau2: f64, s: &[f64]) -> FockSpec {
        FockSpec::new(n, nb, tau2, s.to_vec()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(FockSpec::new(1, 1, 1.0, vec![1.0]).is_err());
        assert!(FockSpec::new(1, 2, 0.0, vec![1.0]).is_err());
        assert!(FockSpec::new(2, 2, 1.0, vec![1.0]).is_err());
        assert!(FockSpec::new(1, 2, 1.0, vec![-1.0]).is_err());
        assert!(matches!(FockSpec::new(20, 12, 1.0, vec![1.0; 20]), Err(Error::Capacity { .. })));
    }

    #[test]
    fn ladder_entries() {
        let q = ladder_matrix(3, 1.0);
        assert_eq!(q[(0, 1)].re, 2f64.sqrt());
        assert_eq!(q[(1, 2)].re, 2.0);
        assert_eq!(q.iter().filter(|v| **v != ZERO).count(), 2);
    }

    #[test]
    fn q_annihilates_ground() {
        let sp = spec(2, 4, 1.3, &[1.0, 2.0]);
        for i in 0..2 {
            let l = mode_ladders(&sp, i).unwrap();
            assert_eq!(norm(&l.q.apply(&sp.ground_state().vector).unwrap()), 0.0);
        }
    }

    #[test]
    fn dx_minus_xd_is_one_on_interior() {
        let sp = spec(2, 5, 0.7, &[1.5, 3.0]);
        let mask = sp.interior_mask();
        for i in 0..2 {
            let l = mode_ladders(&sp, i).unwrap();
            let c = l.d.commutator(&l.x).unwrap();
            let err = c.max_abs_diff_on_columns(&OperatorMatrix::identity(sp.dim()), &mask).unwrap();
            assert!(err < 1e-14, "{err}");
            let ccr = l.q.commutator(&l.qdag).unwrap();
            let err = ccr.max_abs_diff_on_columns(&OperatorMatrix::identity(sp.dim()).scale_real(2.0 * 0.7), &mask).unwrap();
            assert!(err < 1e-14);
        }
    }

    #[test]
    fn two_by_two_hand_assembly() {
        // n = 1, Nb = 2: basis (0,0), (0,1), (1,0), (1,1) as (level, fermion)
        let sp = spec(1, 2, 1.0, &[1.0]);
        let b = assemble_b(&sp).unwrap();
        let r2 = C64::new(2f64.sqrt(), 0.0);
        assert_eq!(b.get(1, 2), r2);
        assert_eq!(b.get(2, 1), r2);
        assert_eq!(b.nnz(), 2);
    }

    #[test]
    fn codec_round_trip() {
        let sp = spec(3, 3, 1.0, &[1.0, 1.0, 1.0]);
        for idx in 0..sp.dim() {
            assert_eq!(sp.encode(&sp.decode(idx).unwrap()).unwrap(), idx);
        }
        let st = StateIndex { bosons: vec![2, 0, 1], fermions: 0b101 };
        assert_eq!(sp.encode(&st).unwrap(), (2 + 9) * 8 + 5);
        assert!(sp.encode(&StateIndex { bosons: vec![3, 0, 0], fermions: 0 }).is_err());
    }

    #[test]
    fn routes_agree_on_interior() {
        let sp = spec(2, 6, 1.0, &[1.0, 2.0]);
        let a = square_b(&sp, SquareRoute::MatrixSquare).unwrap();
        let b = square_b(&sp, SquareRoute::Analytic).unwrap();
        assert!(a.max_abs_diff_on_columns(&b, &sp.interior_mask()).unwrap() <= 1e-12);
        assert!("bogus".parse::<SquareRoute>().is_err());
    }

    #[test]
    fn second_order_form_matches_for_any_tau2() {
        let sp = spec(2, 6, 1.7, &[1.0, 2.5]);
        let a = square_b(&sp, SquareRoute::Analytic).unwrap();
        let b = second_order_square(&sp).unwrap();
        // x^2 and d^2 leave the interior by two levels; compare on states two below the top
        let mask: Vec<bool> = (0..sp.dim()).map(|idx| (0..2).all(|i| sp.level(idx, i) + 2 < 6)).collect();
        assert!(a.max_abs_diff_on_columns(&b, &mask).unwrap() < 1e-12);
    }

    #[test]
    fn dirac_total_rejects_empty() {
        assert!(dirac_total(&spec(1, 3, 1.0, &[1.0]), &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hermitian_with_ground_kernel(
            n in 1usize..=3,
            nb in 2usize..=6,
            tau2 in 0.2f64..3.0,
            s in proptest::collection::vec(0.1f64..5.0, 3),
        ) {
            let sp = spec(n, nb, tau2, &s[..n]);
            let b = assemble_b(&sp).unwrap();
            prop_assert!(b.hermiticity_defect() <= 1e-13);
            prop_assert!(norm(&b.apply(&sp.ground_state().vector).unwrap()) <= 1e-13);
            prop_assert!(intertwiner_violation(&sp).unwrap() <= 1e-12);
        }

        #[test]
        fn square_is_occupation_diagonal_on_interior(
            n in 1usize..=3,
            nb in 2usize..=5,
            tau2 in 0.2f64..3.0,
            s in proptest::collection::vec(0.1f64..5.0, 3),
        ) {
            let sp = spec(n, nb, tau2, &s[..n]);
            let sq = square_b(&sp, SquareRoute::MatrixSquare).unwrap();
            let mask = sp.interior_mask();
            for idx in (0..sp.dim()).filter(|&i| mask[i]) {
                let e = sp.occupation_energy(&sp.decode(idx).unwrap());
                prop_assert!((sq.get(idx, idx).re - e).abs() <= 1e-12 * (1.0 + e));
            }
        }
    }
}
