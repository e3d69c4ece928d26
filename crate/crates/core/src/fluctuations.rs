//! One-forms `Theta [B, Theta]`, the fluctuated operator
//! `B~ = B + A` and the interaction terms of its square.

use nalgebra::DMatrix;

use crate::bott_dirac::{assemble_b, dirac_total, ladder_matrix, lift, FockSpec};
use crate::eigen::{spectrum_with, SolverOptions};
use crate::error::{check_index, check_len, invalid, Error, Result};
use crate::field_theory::{field_from_ladders, FieldOperator};
use crate::gaussian_measure::TestFunction;
use crate::operator::{OperatorMatrix, Symmetry, C64};

/// Hermiticity tolerance for user-supplied `Theta`.
pub const THETA_HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum ThetaRecipe {
    /// `x_mode`.
    Position { mode: usize },
    /// `f(x_mode)` through the eigenbasis of the truncated position matrix.
    BoundedFunction { mode: usize, f: TestFunction },
    /// A ladder-linear field `sum (c q + conj(c) q^dag)`.
    Field(Vec<C64>),
    /// `(x^power p + p x^power) / 2` on one mode, `p` the momentum conjugate
    /// to `x`. Power 1 generates dilations; higher powers interact.
    PositionMomentum { mode: usize, power: u32 },
    /// A fixed matrix; it cannot be rebuilt at another cutoff.
    Custom(OperatorMatrix),
}

impl ThetaRecipe {
    pub fn from_field(field: &FieldOperator) -> Result<Self> {
        if field.coeffs.is_empty() {
            return Err(Error::Unsupported("fermionic fields are not bosonic Theta candidates".into()));
        }
        Ok(ThetaRecipe::Field(field.coeffs.clone()))
    }

    pub fn build(&self, fock: &FockSpec) -> Result<OperatorMatrix> {
        let position = |mode: usize| -> Result<DMatrix<C64>> {
            check_index(mode, fock.n())?;
            let q = ladder_matrix(fock.nb(), fock.tau2());
            Ok((&q + q.adjoint()) * C64::new(0.5 / fock.s()[mode].sqrt(), 0.0))
        };
        let m = match self {
            ThetaRecipe::Position { mode } => lift(fock, Some((*mode, &position(*mode)?)), None)?,
            ThetaRecipe::BoundedFunction { mode, f } => {
                let x = position(*mode)?;
                let eig = x.symmetric_eigen();
                let v = &eig.eigenvectors;
                let fx = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f.eval(l).re, 0.0)));
                let single = v * fx * v.adjoint();
                let single = (&single + single.adjoint()) * C64::new(0.5, 0.0);
                lift(fock, Some((*mode, &single)), None)?
            }
            ThetaRecipe::Field(c) => field_from_ladders(fock, c)?,
            ThetaRecipe::PositionMomentum { mode, power } => {
                let x = position(*mode)?;
                let q = ladder_matrix(fock.nb(), fock.tau2());
                let p = (q.adjoint() - &q) * C64::new(0.0, fock.s()[*mode].sqrt() / (2.0 * fock.tau2()));
                let xk = (0..*power).fold(DMatrix::identity(fock.nb(), fock.nb()), |acc, _| acc * &x);
                let single = (&xk * &p + &p * &xk) * C64::new(0.5, 0.0);
                lift(fock, Some((*mode, &single)), None)?
            }
            ThetaRecipe::Custom(m) => {
                if m.dim() != fock.dim() {
                    return Err(Error::DimensionMismatch {
                        left: m.dim(),
                        right: fock.dim(),
                    });
                }
                m.clone()
            }
        };
        m.declare(Symmetry::Hermitian, THETA_HERMITIAN_TOL)
    }

    /// Largest number of levels `Theta` moves a boson by, when finite.
    pub fn ladder_reach(&self) -> Option<usize> {
        match self {
            ThetaRecipe::Position { .. } | ThetaRecipe::Field(_) => Some(1),
            ThetaRecipe::PositionMomentum { power, .. } => Some(*power as usize + 1),
            ThetaRecipe::BoundedFunction { .. } | ThetaRecipe::Custom(_) => None,
        }
    }
}

/// Extra bosonic levels needed so that `P B~^2 P` matches the untruncated
/// square on levels below the cutoff. Recipes of unbounded reach get
/// [`DEFAULT_PADDING`] and are only approximate.
pub fn cutoff_padding(theta: &ThetaRecipe) -> usize {
    theta.ladder_reach().map_or(DEFAULT_PADDING, |r| 2 * r + 1)
}

pub const DEFAULT_PADDING: usize = 2;

#[derive(Clone, Debug)]
pub struct FluctuationSpec {
    pub theta: ThetaRecipe,
    pub symmetrize: bool,
    pub coupling: f64,
}

impl FluctuationSpec {
    pub fn new(theta: ThetaRecipe, symmetrize: bool, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(invalid("lambda", "coupling must be finite"));
        }
        Ok(FluctuationSpec {
            theta,
            symmetrize,
            coupling,
        })
    }
}

fn form_from(spec: &FluctuationSpec, dirac: &OperatorMatrix, theta: &OperatorMatrix) -> Result<OperatorMatrix> {
    let raw = theta.try_mul(&dirac.commutator(theta)?)?.scale_real(spec.coupling);
    if spec.symmetrize {
        Ok(raw.try_add(&raw.adjoint())?.scale_real(0.5).with_symmetry(Symmetry::Hermitian))
    } else {
        Ok(raw.with_symmetry(Symmetry::None))
    }
}

/// `lambda Theta [B, Theta]`, or its hermitian part when symmetrizing.
pub fn one_form(spec: &FluctuationSpec, fock: &FockSpec) -> Result<OperatorMatrix> {
    let b = assemble_b(fock)?;
    form_from(spec, &b, &spec.theta.build(fock)?)
}

/// `B + one_form`.
pub fn fluctuated_b(spec: &FluctuationSpec, fock: &FockSpec) -> Result<OperatorMatrix> {
    let b = assemble_b(fock)?;
    let a = form_from(spec, &b, &spec.theta.build(fock)?)?;
    let sym = if spec.symmetrize { Symmetry::Hermitian } else { Symmetry::None };
    Ok(b.try_add(&a)?.with_symmetry(sym))
}

/// `A^2 + {B, A}` with `A` the one-form.
pub fn interaction_hamiltonian(spec: &FluctuationSpec, fock: &FockSpec) -> Result<OperatorMatrix> {
    let b = assemble_b(fock)?;
    let a = form_from(spec, &b, &spec.theta.build(fock)?)?;
    a.try_mul(&a)?.try_add(&b.anticommutator(&a)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluctReport {
    pub coupling: f64,
    pub eigenvalues: Vec<f64>,
    pub ground: f64,
    pub gap: Option<f64>,
    /// `||B~ - B~^dag||_max` at the working cutoff.
    pub hermiticity_defect: f64,
}

/// Gap threshold separating degenerate ground states from excitations.
pub const GAP_TOL: f64 = 1e-9;

/// Lowest `count` eigenvalues of `P B~^2 P`, where `B~` is built with
/// [`cutoff_padding`] extra bosonic levels per mode and `P` projects back onto
/// levels `< Nb`.
pub fn fluct_spectrum(spec: &FluctuationSpec, fock: &FockSpec, count: usize, opts: &SolverOptions) -> Result<FluctReport> {
    if !spec.symmetrize {
        return Err(invalid("symmetrize", "spectra need the hermitian one-form"));
    }
    let wide = fock.with_cutoff(fock.nb() + cutoff_padding(&spec.theta))?;
    let bt = fluctuated_b(spec, &wide)?;
    let defect = bt.hermiticity_defect();
    let square = bt.try_mul(&bt)?.with_symmetry(Symmetry::Hermitian);
    let keep: Vec<bool> = (0..wide.dim())
        .map(|idx| (0..wide.n()).all(|i| wide.level(idx, i) < fock.nb()))
        .collect();
    let (compressed, _) = square.compress(&keep)?;
    let compressed = compressed.with_symmetry(Symmetry::Hermitian);
    let sp = spectrum_with(&compressed, count.min(compressed.dim()), opts)?;
    let eigenvalues = sp.eigenvalues();
    Ok(FluctReport {
        coupling: spec.coupling,
        ground: eigenvalues[0],
        gap: sp.gap(GAP_TOL),
        eigenvalues,
        hermiticity_defect: defect,
    })
}

/// `(Theta ⊗ 1) [D_tot, Theta ⊗ 1]`, scaled and optionally symmetrized as in
/// [`one_form`], on the space of [`dirac_total`].
pub fn dirac_total_one_form(spec: &FluctuationSpec, fock: &FockSpec, spatial_modes: &[i64]) -> Result<OperatorMatrix> {
    let dt = dirac_total(fock, spatial_modes)?;
    let theta = spec.theta.build(fock)?;
    let lifted = OperatorMatrix::kron(&theta, &OperatorMatrix::identity(spatial_modes.len()));
    check_len(dt.dim(), lifted.dim())?;
    form_from(spec, &dt, &lifted)
}
