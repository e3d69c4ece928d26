//! Composite field operators on the truncated Fock space.
//!
//! Every bosonic field here is linear in the ladders,
//! `F = sum_j (c_j q_j + conj(c_j) q_j^dag)`, so it is stored together with
//! its coefficient vector `c`. Real cos/sin mode functions are paired through
//! `xi~ = xi` for reflection-even modes and `xi~ = i xi` for odd ones, which
//! keeps every field hermitian.

use nalgebra::{DMatrix, Matrix2};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::bott_dirac::{assemble_b, fermion_ladders, ladder_matrix, lift_entries, mode_ladders, split_bosonic_fermionic, FockSpec};
use crate::error::{check_len, invalid, Error, Result};
use crate::holonomy::GaugeField;
use crate::lie::LieStructure;
use crate::operator::{OperatorMatrix, Symmetry, C64, I, ZERO};
use crate::spectral_basis::{ModeBasis, WeightRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldLabel {
    Phi,
    Pi,
    A { generator: usize, axis: usize },
    E { generator: usize, axis: usize },
    PsiTilde,
}

#[derive(Clone, Debug)]
pub struct FieldOperator {
    pub label: FieldLabel,
    pub point: Vec<f64>,
    pub matrix: OperatorMatrix,
    /// Ladder coefficients `c_j`; empty for fermionic fields.
    pub coeffs: Vec<C64>,
}

/// `sum_j (c_j q_j + conj(c_j) q_j^dag)` assembled from [`mode_ladders`].
pub fn field_from_ladders(fock: &FockSpec, coeffs: &[C64]) -> Result<OperatorMatrix> {
    check_len(fock.n(), coeffs.len())?;
    let mut out = OperatorMatrix::zeros(fock.dim());
    for (j, &c) in coeffs.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        let l = mode_ladders(fock, j)?;
        out = out.axpy(c, &l.q)?.axpy(c.conj(), &l.qdag)?;
    }
    Ok(out.with_symmetry(Symmetry::Hermitian))
}

/// Same operator as [`field_from_ladders`], summing lifted single-mode
/// matrices into one triplet list.
pub fn field_from_mode_sum(fock: &FockSpec, coeffs: &[C64]) -> Result<OperatorMatrix> {
    check_len(fock.n(), coeffs.len())?;
    let q1 = ladder_matrix(fock.nb(), fock.tau2());
    let qd1 = q1.adjoint();
    let mut t = Vec::new();
    for (j, &c) in coeffs.iter().enumerate() {
        let single = &q1 * c + &qd1 * c.conj();
        t.extend(lift_entries(fock, Some((j, &single)), None)?);
    }
    Ok(OperatorMatrix::from_triplets(fock.dim(), t)?.with_symmetry(Symmetry::Hermitian))
}

fn check_shared(basis: &ModeBasis, fock: &FockSpec) -> Result<()> {
    if basis.len() != fock.n() {
        return Err(Error::StructureMismatch(format!(
            "basis has {} modes, Fock space {}",
            basis.len(),
            fock.n()
        )));
    }
    for (i, (m, &s)) in basis.modes().iter().zip(fock.s()).enumerate() {
        if (m.s - s).abs() > 1e-12 * m.s {
            return Err(Error::StructureMismatch(format!("weight of mode {i}: basis {} vs {s}", m.s)));
        }
    }
    Ok(())
}

/// `xi~_i(point)` for every mode.
pub fn paired_amplitudes(basis: &ModeBasis, point: &[f64]) -> Result<Vec<C64>> {
    let amps = basis.eval_all(point)?;
    Ok(basis
        .modes()
        .iter()
        .zip(amps)
        .map(|(m, a)| if m.is_even() { C64::new(a, 0.0) } else { C64::new(0.0, a) })
        .collect())
}

/// Ladder coefficients of `phi'` and `pi` built from paired amplitudes and weights.
fn canonical_coeffs(amps: &[C64], s: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let phi = amps.iter().zip(s).map(|(a, s)| a / (2.0 * s).sqrt()).collect();
    let pi = amps.iter().zip(s).map(|(a, s)| -I * a * (s / 2.0).sqrt()).collect();
    (phi, pi)
}

/// `phi'(m) = sum (2 s_i)^{-1/2} (xi~ q + conj(xi~) q^dag)` and
/// `pi(m) = -i sum (s_i / 2)^{1/2} (xi~ q - conj(xi~) q^dag)`.
pub fn scalar_field(basis: &ModeBasis, fock: &FockSpec, point: &[f64]) -> Result<(FieldOperator, FieldOperator)> {
    check_shared(basis, fock)?;
    let amps = paired_amplitudes(basis, point)?;
    let (phi_c, pi_c) = canonical_coeffs(&amps, fock.s());
    let phi = FieldOperator {
        label: FieldLabel::Phi,
        point: point.to_vec(),
        matrix: field_from_ladders(fock, &phi_c)?,
        coeffs: phi_c,
    };
    let pi = FieldOperator {
        label: FieldLabel::Pi,
        point: point.to_vec(),
        matrix: field_from_ladders(fock, &pi_c)?,
        coeffs: pi_c,
    };
    Ok((phi, pi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    /// `<ground| i [phi'(m), pi(m')] |ground>` from the matrices.
    pub matrix: C64,
    /// `-tau2 sum_i (xi~_i(m) conj(xi~_i(m')) + conj(xi~_i(m)) xi~_i(m'))`.
    pub mode_sum: f64,
    /// Largest deviation of the commutator from `matrix * 1` on interior states.
    pub interior_spread: f64,
}

pub fn commutator_kernel(basis: &ModeBasis, fock: &FockSpec, m: &[f64], mprime: &[f64]) -> Result<KernelValue> {
    let (phi, _) = scalar_field(basis, fock, m)?;
    let (_, pi) = scalar_field(basis, fock, mprime)?;
    let k = phi.matrix.commutator(&pi.matrix)?.scale(I);
    let value = k.get(0, 0);
    let mask = fock.interior_mask();
    let scalar = OperatorMatrix::identity(fock.dim()).scale(value);
    let interior_spread = k.max_abs_diff_on_block(&scalar, &mask)?;
    Ok(KernelValue {
        matrix: value,
        mode_sum: kernel_mode_sum(basis, fock.tau2(), m, mprime)?,
        interior_spread,
    })
}

/// Closed-form kernel, `-2 tau2 sum_i xi_i(m) xi_i(m')`.
pub fn kernel_mode_sum(basis: &ModeBasis, tau2: f64, m: &[f64], mprime: &[f64]) -> Result<f64> {
    let a = paired_amplitudes(basis, m)?;
    let b = paired_amplitudes(basis, mprime)?;
    Ok(-tau2 * a.iter().zip(&b).map(|(x, y)| (x * y.conj() + x.conj() * y).re).sum::<f64>())
}

/// One gauge degree of freedom: basis mode, polarization vector, generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSlot {
    pub mode: usize,
    pub polarization: Vec<f64>,
    pub generator: usize,
}

/// Multi-index enumeration for gauge fields, generator fastest, then
/// polarization, then mode.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeLayout {
    pub slots: Vec<GaugeSlot>,
    pub weights: Vec<f64>,
}

/// Orthonormal polarization frame for wavevector `k`. Transversal frames come
/// from Gram-Schmidt of the axes, taken cyclically from the one after the
/// dominant component, against `k`.
pub fn polarizations(k: &[u32], transversal_only: bool) -> Result<Vec<Vec<f64>>> {
    let d = k.len();
    let axis = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    if !transversal_only {
        return Ok((0..d).map(axis).collect());
    }
    if d < 2 {
        return Err(invalid("transversal_only", "needs d >= 2"));
    }
    let kn: f64 = k.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    if kn == 0.0 {
        return Err(invalid("transversal_only", "the constant mode has no transversal direction"));
    }
    let dominant = (0..d).max_by_key(|&i| (k[i], std::cmp::Reverse(i))).unwrap_or(0);
    let mut frame: Vec<Vec<f64>> = vec![k.iter().map(|&x| x as f64 / kn).collect()];
    for step in 1..=d {
        if frame.len() == d {
            break;
        }
        let mut v = axis((dominant + step) % d);
        for f in &frame {
            let p: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
            for (vi, fi) in v.iter_mut().zip(f) {
                *vi -= p * fi;
            }
        }
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            frame.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    frame.remove(0);
    Ok(frame)
}

pub fn gauge_layout(basis: &ModeBasis, lie: &LieStructure, transversal_only: bool) -> Result<GaugeLayout> {
    let mut slots = Vec::new();
    let mut weights = Vec::new();
    for (i, m) in basis.modes().iter().enumerate() {
        for pol in polarizations(&m.k, transversal_only)? {
            for a in 0..lie.dim() {
                slots.push(GaugeSlot {
                    mode: i,
                    polarization: pol.clone(),
                    generator: a,
                });
                weights.push(m.s);
            }
        }
    }
    Ok(GaugeLayout { slots, weights })
}

/// Components `A_a^mu(point)` and `E_a^mu(point)`, ordered generator-major
/// then axis. The Fock space must carry one mode per layout slot.
pub fn gauge_field(
    basis: &ModeBasis,
    fock: &FockSpec,
    lie: &LieStructure,
    point: &[f64],
    transversal_only: bool,
) -> Result<(Vec<FieldOperator>, Vec<FieldOperator>)> {
    let layout = gauge_layout(basis, lie, transversal_only)?;
    if layout.slots.len() != fock.n() {
        return Err(Error::StructureMismatch(format!(
            "gauge layout has {} slots, Fock space {} modes",
            layout.slots.len(),
            fock.n()
        )));
    }
    for (j, (&w, &s)) in layout.weights.iter().zip(fock.s()).enumerate() {
        if (w - s).abs() > 1e-12 * w {
            return Err(Error::StructureMismatch(format!("weight of slot {j}: {w} vs {s}")));
        }
    }
    let amps = paired_amplitudes(basis, point)?;
    let d = basis.geometry().d();
    let mut a_ops = Vec::new();
    let mut e_ops = Vec::new();
    for gen in 0..lie.dim() {
        for axis in 0..d {
            let mut a_c = vec![ZERO; fock.n()];
            let mut e_c = vec![ZERO; fock.n()];
            for (j, slot) in layout.slots.iter().enumerate() {
                if slot.generator != gen || slot.polarization[axis] == 0.0 {
                    continue;
                }
                let amp = amps[slot.mode] * slot.polarization[axis];
                let s = layout.weights[j];
                a_c[j] = amp / (2.0 * s).sqrt();
                e_c[j] = -I * amp * (s / 2.0).sqrt();
            }
            a_ops.push(FieldOperator {
                label: FieldLabel::A { generator: gen, axis },
                point: point.to_vec(),
                matrix: field_from_ladders(fock, &a_c)?,
                coeffs: a_c,
            });
            e_ops.push(FieldOperator {
                label: FieldLabel::E { generator: gen, axis },
                point: point.to_vec(),
                matrix: field_from_ladders(fock, &e_c)?,
                coeffs: e_c,
            });
        }
    }
    Ok((a_ops, e_ops))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sector {
    ScalarMassive { mass: f64 },
    GaugePhoton,
}

/// The bosonic part of `B^2`, `sum_i 2 tau2 s_i n_i`, after checking that the
/// basis weights come from the sector's dispersion.
pub fn free_hamiltonian(basis: &ModeBasis, fock: &FockSpec, sector: Sector) -> Result<OperatorMatrix> {
    match (sector, basis.weight_rule()) {
        (Sector::ScalarMassive { mass }, WeightRule::Massive { mass: m }) if mass == *m => {}
        (Sector::GaugePhoton, WeightRule::Photon { .. }) => {}
        (sector, rule) => {
            return Err(Error::StructureMismatch(format!("sector {sector:?} does not match weight rule {rule:?}")));
        }
    }
    let weights = basis.weights();
    let ok = fock
        .s()
        .iter()
        .all(|s| weights.iter().any(|w| (w - s).abs() <= 1e-12 * w));
    if !ok {
        return Err(Error::StructureMismatch("Fock weights are not basis weights".into()));
    }
    Ok(split_bosonic_fermionic(fock)?.0.with_symmetry(Symmetry::Hermitian))
}

/// `[B, source]` for a `Phi` or `A` field.
pub fn fermion_field(fock: &FockSpec, source: &FieldOperator) -> Result<FieldOperator> {
    match source.label {
        FieldLabel::Phi | FieldLabel::A { .. } => {}
        other => return Err(Error::Unsupported(format!("fermion field of {other:?}"))),
    }
    let b = assemble_b(fock)?;
    let matrix = b.commutator(&source.matrix)?.with_symmetry(Symmetry::None);
    Ok(FieldOperator {
        label: FieldLabel::PsiTilde,
        point: source.point.clone(),
        matrix,
        coeffs: Vec::new(),
    })
}

/// `sum_j 2 tau2 sqrt(s_j) (conj(c_j) a_j^dag - c_j a_j)`, the commutator of `B`
/// with the ladder-linear field of coefficients `c`.
pub fn fermion_field_closed_form(fock: &FockSpec, coeffs: &[C64]) -> Result<OperatorMatrix> {
    check_len(fock.n(), coeffs.len())?;
    let mut out = OperatorMatrix::zeros(fock.dim());
    for (j, &c) in coeffs.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        let (ad, a) = fermion_ladders(fock, j)?;
        let w = 2.0 * fock.tau2() * fock.s()[j].sqrt();
        out = out.axpy(c.conj() * w, &ad)?.axpy(-c * w, &a)?;
    }
    Ok(out)
}

/// `(1/sqrt 2) [[1, 1/s], [s, -1]]`, an involution for every `s > 0`.
pub fn j_matrix(s: f64) -> Result<Matrix2<f64>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("{s} must be positive")));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Matrix2::new(r, r / s, r * s, -r))
}

/// `1/2 int sum_{mu<nu} sum_a (F^a_{mu nu})^2` with
/// `F_{mu nu} = d_mu A_nu - d_nu A_mu - [A_mu, A_nu]`, derivatives taken
/// spectrally on a `grid^d` lattice.
pub fn yang_mills_energy(field: &dyn GaugeField, grid: usize) -> Result<f64> {
    let g = field.geometry();
    let d = g.d();
    let required = (4 * field.top_harmonic() as usize + 1).max(4);
    if grid < required {
        return Err(Error::GridTooCoarse { grid, required });
    }
    let lie = field.lie();
    let r = lie.rep_dim();
    let total = grid.pow(d as u32);
    let h = g.length() / grid as f64;
    let points: Vec<Vec<f64>> = (0..total)
        .map(|flat| {
            let mut rem = flat;
            (0..d)
                .map(|_| {
                    let i = rem % grid;
                    rem /= grid;
                    i as f64 * h
                })
                .collect()
        })
        .collect();
    // a[mu][point] is A_mu at the grid point
    let a: Vec<Vec<DMatrix<C64>>> = (0..d)
        .map(|mu| points.iter().map(|p| field.eval(mu, p)).collect())
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(grid);
    let inv = planner.plan_fft_inverse(grid);
    let w = 2.0 * std::f64::consts::PI / g.length();
    let derivative = |samples: &[DMatrix<C64>], axis: usize| -> Vec<DMatrix<C64>> {
        let mut out = vec![DMatrix::from_element(r, r, ZERO); total];
        let stride = grid.pow(axis as u32);
        for start in 0..total {
            if (start / stride) % grid != 0 {
                continue;
            }
            for i in 0..r {
                for j in 0..r {
                    let mut line: Vec<Complex<f64>> = (0..grid).map(|t| samples[start + t * stride][(i, j)]).collect();
                    fwd.process(&mut line);
                    for (idx, v) in line.iter_mut().enumerate() {
                        let k = if 2 * idx < grid {
                            idx as f64
                        } else if 2 * idx == grid {
                            0.0
                        } else {
                            idx as f64 - grid as f64
                        };
                        *v *= C64::new(0.0, w * k) / grid as f64;
                    }
                    inv.process(&mut line);
                    for (t, v) in line.into_iter().enumerate() {
                        out[start + t * stride][(i, j)] = v;
                    }
                }
            }
        }
        out
    };
    let cell = h.powi(d as i32);
    let mut energy = 0.0;
    for mu in 0..d {
        for nu in (mu + 1)..d {
            let d_mu_a_nu = derivative(&a[nu], mu);
            let d_nu_a_mu = derivative(&a[mu], nu);
            for p in 0..total {
                let f = &d_mu_a_nu[p] - &d_nu_a_mu[p] - crate::lie::bracket(&a[mu][p], &a[nu][p]);
                energy += 0.5 * lie.component_norm_sq(&f) * cell;
            }
        }
    }
    Ok(energy)
}
