//! Ground-state Gaussian measure over truncated field configurations.
//!
//! Under the ground state the coefficients are independent centred normals,
//! `x_i ~ N(0, tau2 / (2 s_i))`, and the field at a point is
//! `phi(m) = sum_i x_i xi_i(m)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bott_dirac::{assemble_b, FockSpec};
use crate::eigen::extremal_eigenvalues;
use crate::error::{check_len, invalid, Error, Result};
use crate::numfmt::sig17;
use crate::operator::{C64, ZERO};
use crate::quadrature::{gauss_hermite, normalized_hermite};
use crate::spectral_basis::{FieldConfig, ModeBasis};

/// Largest tensor Gauss-Hermite grid evaluated before collapsing to the
/// exact one-dimensional law of `phi(m)`.
pub const TENSOR_BUDGET: usize = 1 << 20;

/// Location of the maximum of `u (1 - u^2) / (1 + u^2)^4`.
fn bump_third_derivative_peak() -> f64 {
    let u = (1.0 - 2.0 / 5f64.sqrt()).sqrt();
    u * (1.0 - u * u) / (1.0 + u * u).powi(4)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// Coefficients `c_0 + c_1 r + ... + c_4 r^4`.
    Polynomial(Vec<f64>),
    /// `exp(i t r)`.
    Exponential { t: f64 },
    /// `sin(t r + phase)`.
    Sine { t: f64, phase: f64 },
    /// `1 / (1 + ((r - center) / width)^2)`.
    Bump { width: f64, center: f64 },
}

impl TestFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > 5 {
            return Err(invalid("polynomial", format!("degree {} exceeds 4", coeffs.len() - 1)));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("polynomial", "coefficients must be finite"));
        }
        Ok(TestFunction::Polynomial(coeffs))
    }

    pub fn bump(width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(invalid("bump", format!("width {width} must be positive")));
        }
        Ok(TestFunction::Bump { width, center })
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            TestFunction::Constant(_) => Some(0),
            TestFunction::Polynomial(c) => Some(c.iter().rposition(|&x| x != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    /// True when `f(a + b)` factorizes through exponentials of `a` and `b`.
    pub fn is_separable(&self) -> bool {
        matches!(
            self,
            TestFunction::Constant(_) | TestFunction::Exponential { .. } | TestFunction::Sine { .. }
        )
    }

    pub fn eval(&self, r: f64) -> C64 {
        self.derivative(0, r)
    }

    /// `f^(order)(r)` for `order <= 3`.
    pub fn derivative(&self, order: usize, r: f64) -> C64 {
        let re = |x: f64| C64::new(x, 0.0);
        match self {
            TestFunction::Constant(c) => re(if order == 0 { *c } else { 0.0 }),
            TestFunction::Polynomial(c) => {
                let mut acc = 0.0;
                for (k, &ck) in c.iter().enumerate().skip(order) {
                    let falling: f64 = ((k - order + 1)..=k).map(|j| j as f64).product();
                    acc += ck * falling * r.powi((k - order) as i32);
                }
                re(acc)
            }
            TestFunction::Exponential { t } => C64::new(0.0, *t).powu(order as u32) * C64::new(0.0, t * r).exp(),
            TestFunction::Sine { t, phase } => {
                let arg = t * r + phase + order as f64 * PI / 2.0;
                re(t.powi(order as i32) * arg.sin())
            }
            TestFunction::Bump { width, center } => {
                let u = (r - center) / width;
                let q = 1.0 + u * u;
                re(match order {
                    0 => 1.0 / q,
                    1 => -2.0 * u / (q * q) / width,
                    2 => (6.0 * u * u - 2.0) / q.powi(3) / (width * width),
                    _ => 24.0 * u * (1.0 - u * u) / q.powi(4) / width.powi(3),
                })
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.derivative_bound(0)
    }

    /// `||f^(order)||_inf`; infinite for unbounded polynomials.
    pub fn derivative_bound(&self, order: usize) -> f64 {
        match self {
            TestFunction::Constant(c) => {
                if order == 0 {
                    c.abs()
                } else {
                    0.0
                }
            }
            TestFunction::Polynomial(c) => {
                let deg = self.degree().unwrap_or(0);
                if deg < order {
                    0.0
                } else if deg == order {
                    let falling: f64 = (1..=order).map(|j| j as f64).product();
                    (c[deg] * falling).abs()
                } else {
                    f64::INFINITY
                }
            }
            TestFunction::Exponential { t } | TestFunction::Sine { t, .. } => t.abs().powi(order as i32),
            TestFunction::Bump { width, .. } => match order {
                0 => 1.0,
                1 => 3.0 * 3f64.sqrt() / 8.0 / width,
                2 => 2.0 / (width * width),
                _ => 24.0 * bump_third_derivative_peak() / width.powi(3),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureSpec {
    GaussHermite { order: usize },
    MonteCarlo { samples: usize, seed: Option<u64> },
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::GaussHermite { order } if order < 2 => {
                Err(invalid("quad", format!("Gauss-Hermite order {order} below 2")))
            }
            QuadratureSpec::MonteCarlo { samples: 0, .. } => Err(invalid("quad", "Monte Carlo needs samples")),
            QuadratureSpec::MonteCarlo { seed: None, .. } => Err(invalid("seed", "Monte Carlo requires an explicit seed")),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for QuadratureSpec {
    type Err = Error;
    /// `gh:<order>` or `mc:<samples>` (seed supplied separately).
    fn from_str(s: &str) -> Result<Self> {
        let (kind, num) = s
            .split_once(':')
            .ok_or_else(|| invalid("quad", format!("`{s}` is not gh:<order> or mc:<samples>")))?;
        let n: usize = num
            .trim()
            .parse()
            .map_err(|_| invalid("quad", format!("`{num}` is not a count")))?;
        let q = match kind.trim() {
            "gh" => QuadratureSpec::GaussHermite { order: n },
            "mc" => QuadratureSpec::MonteCarlo { samples: n, seed: None },
            other => return Err(invalid("quad", format!("unknown quadrature `{other}`"))),
        };
        match q {
            QuadratureSpec::GaussHermite { order } if order < 2 => q.validate().map(|_| q),
            QuadratureSpec::MonteCarlo { samples: 0, .. } => Err(invalid("quad", "Monte Carlo needs samples")),
            _ => Ok(q),
        }
    }
}

/// A value with its statistical standard error (0 for deterministic rules).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub std_error: f64,
}

/// Sobolev coefficients of `f` on the first `n` modes, from a trapezoid grid
/// of `grid` points per axis.
pub fn embed(basis: &ModeBasis, f: &dyn Fn(&[f64]) -> f64, n: usize, grid: usize) -> Result<FieldConfig> {
    let sub = basis.truncated(n)?;
    let required = (4 * sub.max_k() as usize).max(4);
    if grid < required {
        return Err(Error::GridTooCoarse { grid, required });
    }
    let g = basis.geometry();
    let d = g.d();
    let h = g.length() / grid as f64;
    let total = grid.pow(d as u32);
    let mut coeffs = vec![0.0; n];
    let mut point = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for p in point.iter_mut() {
            *p = (rem % grid) as f64 * h;
            rem /= grid;
        }
        let v = f(&point);
        if v == 0.0 {
            continue;
        }
        for (c, m) in coeffs.iter_mut().zip(sub.modes()) {
            *c += v * m.eval_l2(g.length(), &point);
        }
    }
    let cell = h.powi(d as i32);
    for (c, m) in coeffs.iter_mut().zip(sub.modes()) {
        *c *= cell * m.sobolev_factor;
    }
    Ok(FieldConfig::new(coeffs))
}

/// `(amplitude, weight)` pairs in a canonical order so that permuting modes
/// with identical data leaves every floating-point operation unchanged.
fn canonical_modes(amps: &[f64], s: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = amps.iter().copied().zip(s.iter().copied()).collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    v
}

/// Expectation of `f(sum_i a_i x_i)` for independent `x_i ~ N(0, tau2/(2 s_i))`.
pub fn gaussian_expectation(amps: &[f64], s: &[f64], tau2: f64, f: &TestFunction, quad: QuadratureSpec) -> Result<Estimate> {
    check_len(amps.len(), s.len())?;
    quad.validate()?;
    let modes = canonical_modes(amps, s);
    match quad {
        QuadratureSpec::GaussHermite { order } => gh_expectation(&modes, tau2, f, order),
        QuadratureSpec::MonteCarlo { samples, seed } => {
            Ok(mc_expectation(&modes, tau2, f, samples, seed.expect("validated")))
        }
    }
}

fn gh_expectation(modes: &[(f64, f64)], tau2: f64, f: &TestFunction, order: usize) -> Result<Estimate> {
    if let Some(deg) = f.degree() {
        if deg > 2 * order - 1 {
            return Err(Error::Quadrature(format!(
                "order {order} integrates degree <= {} exactly, polynomial has degree {deg}",
                2 * order - 1
            )));
        }
    }
    let (y, w) = gauss_hermite(order)?;
    let norm = PI.sqrt();
    // std dev scale of each coefficient in units of the GH variable
    let scales: Vec<f64> = modes.iter().map(|&(a, s)| a * (tau2 / s).sqrt()).collect();
    let char_product = |t: f64| -> C64 {
        scales
            .iter()
            .map(|&sc| {
                y.iter()
                    .zip(&w)
                    .map(|(&yk, &wk)| C64::new(0.0, t * sc * yk).exp() * wk)
                    .sum::<C64>()
                    / norm
            })
            .product()
    };
    let value = match f {
        TestFunction::Constant(c) => C64::new(*c, 0.0),
        TestFunction::Exponential { t } => char_product(*t),
        TestFunction::Sine { t, phase } => {
            let plus = C64::new(0.0, *phase).exp() * char_product(*t);
            let minus = C64::new(0.0, -*phase).exp() * char_product(-*t);
            (plus - minus) / C64::new(0.0, 2.0)
        }
        _ => {
            let n = scales.len();
            let fits = (order as f64).powi(n as i32) <= TENSOR_BUDGET as f64;
            if fits {
                tensor_gh(&scales, &y, &w, f)
            } else {
                // phi(m) is itself Gaussian with variance sum a^2 tau2 / (2 s)
                let mut var_terms: Vec<f64> = scales.iter().map(|sc| sc * sc / 2.0).collect();
                var_terms.sort_by(f64::total_cmp);
                let sd = (2.0 * var_terms.iter().sum::<f64>()).sqrt();
                y.iter().zip(&w).map(|(&yk, &wk)| f.eval(sd * yk) * wk).sum::<C64>() / norm
            }
        }
    };
    Ok(Estimate { value, std_error: 0.0 })
}

fn tensor_gh(scales: &[f64], y: &[f64], w: &[f64], f: &TestFunction) -> C64 {
    let n = scales.len();
    let q = y.len();
    if n == 0 {
        return f.eval(0.0);
    }
    let norm = PI.sqrt().powi(n as i32);
    let mut idx = vec![0usize; n];
    let mut acc = ZERO;
    loop {
        let mut r = 0.0;
        let mut wt = 1.0;
        for k in 0..n {
            r += scales[k] * y[idx[k]];
            wt *= w[idx[k]];
        }
        acc += f.eval(r) * wt;
        let mut k = 0;
        loop {
            if k == n {
                return acc / norm;
            }
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn mc_expectation(modes: &[(f64, f64)], tau2: f64, f: &TestFunction, samples: usize, seed: u64) -> Estimate {
    let mut r = vec![0.0; samples];
    for (k, &(a, s)) in modes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let sd = (tau2 / (2.0 * s)).sqrt();
        for ri in r.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *ri += a * sd * z;
        }
    }
    let vals: Vec<C64> = r.iter().map(|&x| f.eval(x)).collect();
    let n = samples as f64;
    let mean = vals.iter().sum::<C64>() / n;
    let var = if samples > 1 {
        vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

fn check_shared(basis: &ModeBasis, fock: &FockSpec) -> Result<()> {
    if fock.n() > basis.len() {
        return Err(Error::StructureMismatch(format!(
            "Fock space has {} modes, basis only {}",
            fock.n(),
            basis.len()
        )));
    }
    for (i, (&a, m)) in fock.s().iter().zip(basis.modes()).enumerate() {
        if (a - m.s).abs() > 1e-12 * m.s {
            return Err(Error::StructureMismatch(format!("weight of mode {i}: {a} vs basis {}", m.s)));
        }
    }
    Ok(())
}

fn veto_if_divergent(basis: &ModeBasis) -> Result<()> {
    if !basis.convergence_report().condition16.verdict.passes() {
        return Err(Error::ConvergenceVeto {
            condition: "16",
            d: basis.geometry().d(),
            sigma: basis.params().sigma(),
        });
    }
    Ok(())
}

/// `<ground| M_f(point) |ground>` over the first `fock.n()` modes.
pub fn expectation_ground(
    basis: &ModeBasis,
    fock: &FockSpec,
    f: &TestFunction,
    point: &[f64],
    quad: QuadratureSpec,
) -> Result<Estimate> {
    veto_if_divergent(basis)?;
    check_shared(basis, fock)?;
    let amps = basis.truncated(fock.n())?.eval_all(point)?;
    gaussian_expectation(&amps, fock.s(), fock.tau2(), f, quad)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub n: usize,
    pub value: C64,
    /// `|I_{n+1} - I_n|`.
    pub increment: f64,
    /// `C ||xi_{n+1}||^2 / s_{n+1} + B ||xi_{n+1}||^3 / s_{n+1}^2`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.increment <= r.bound)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,value_re,value_im,increment,bound\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.n,
                sig17(r.value.re),
                sig17(r.value.im),
                sig17(r.increment),
                sig17(r.bound)
            );
        }
        s
    }
}

/// Truncation increments of the expectation against their Taylor bound,
/// for `n` in `n_from..=n_to`. The basis must hold at least `n_to + 1` modes.
pub fn tail_bound_check(
    basis: &ModeBasis,
    fock: &FockSpec,
    f: &TestFunction,
    point: &[f64],
    n_from: usize,
    n_to: usize,
    quad: QuadratureSpec,
) -> Result<TailReport> {
    if n_from == 0 || n_from > n_to {
        return Err(invalid("n", format!("range {n_from}..={n_to} is empty or starts at 0")));
    }
    if n_to + 1 > basis.len() {
        return Err(Error::StructureMismatch(format!(
            "need {} modes for the last increment, basis has {}",
            n_to + 1,
            basis.len()
        )));
    }
    veto_if_divergent(basis)?;
    let tau2 = fock.tau2();
    let amps = basis.eval_all(point)?;
    let s = basis.weights();
    let c = tau2 * f.derivative_bound(2) / 4.0;
    let b = tau2 * tau2 * f.derivative_bound(3);
    let value_at = |n: usize| gaussian_expectation(&amps[..n], &s[..n], tau2, f, quad).map(|e| e.value);
    let mut rows = Vec::new();
    let mut current = value_at(n_from)?;
    for n in n_from..=n_to {
        let next = value_at(n + 1)?;
        let m = &basis.modes()[n];
        let xi = m.supnorm;
        let bound = c * xi * xi / m.s + if b == 0.0 { 0.0 } else { b * xi.powi(3) / (m.s * m.s) };
        rows.push(TailRow {
            n,
            value: current,
            increment: (next - current).norm(),
            bound,
        });
        current = next;
    }
    Ok(TailReport { rows })
}

/// `<ground| U_{t omega} |ground> = prod_i exp(-s_i t^2 omega_i^2 / (4 tau2))`.
pub fn translate_overlap(fock: &FockSpec, omega: &FieldConfig, t: f64) -> Result<f64> {
    check_len(fock.n(), omega.len())?;
    let exponent: f64 = fock
        .s()
        .iter()
        .zip(&omega.coeffs)
        .map(|(s, w)| s * t * t * w * w / (4.0 * fock.tau2()))
        .sum();
    Ok((-exponent).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContinuityFamily {
    /// `f_t(r) = exp(i t r)`.
    Exponential,
    /// `f_t = c` for every `t`.
    Constant(f64),
}

impl ContinuityFamily {
    fn member(&self, t: f64) -> TestFunction {
        match *self {
            ContinuityFamily::Exponential => TestFunction::Exponential { t },
            ContinuityFamily::Constant(c) => TestFunction::Constant(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityRow {
    pub t: f64,
    pub value: C64,
    /// `|E(t) - E(0)|`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub base: C64,
    pub rows: Vec<ContinuityRow>,
    /// Fitted exponent `p` in `deviation ~ t^p`; `None` when all deviations vanish.
    pub observed_order: Option<f64>,
    /// Richardson-extrapolated `dE/dt` at 0.
    pub first_derivative: C64,
    /// Richardson-extrapolated `d^2E/dt^2` at 0.
    pub second_derivative: C64,
    /// `<phi(point)^2>` from the `r^2` expectation.
    pub second_moment: f64,
}

pub fn strong_continuity_probe(
    basis: &ModeBasis,
    fock: &FockSpec,
    family: ContinuityFamily,
    point: &[f64],
    t_sequence: &[f64],
    quad: QuadratureSpec,
) -> Result<ContinuityReport> {
    if t_sequence.is_empty() || t_sequence.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(invalid("t", "need a non-empty sequence of positive steps"));
    }
    let e = |t: f64| expectation_ground(basis, fock, &family.member(t), point, quad).map(|x| x.value);
    let base = e(0.0)?;
    let mut rows = Vec::new();
    for &t in t_sequence {
        let v = e(t)?;
        rows.push(ContinuityRow {
            t,
            value: v,
            deviation: (v - base).norm(),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| (r.t.ln(), r.deviation.ln()))
        .collect();
    let observed_order = if pts.len() == rows.len() {
        crate::spectral_basis::fit_slope(&pts)
    } else {
        None
    };
    let h = t_sequence[0];
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for k in 0..3 {
        let hk = h / f64::powi(2.0, k);
        let (p, m) = (e(hk)?, e(-hk)?);
        d1.push((p - m) / (2.0 * hk));
        d2.push((p - base * 2.0 + m) / (hk * hk));
    }
    let richardson = |d: &[C64]| {
        let r1 = (d[1] * 4.0 - d[0]) / 3.0;
        let r2 = (d[2] * 4.0 - d[1]) / 3.0;
        (r2 * 16.0 - r1) / 15.0
    };
    let square = TestFunction::Polynomial(vec![0.0, 0.0, 1.0]);
    let second_moment = expectation_ground(basis, fock, &square, point, QuadratureSpec::GaussHermite { order: 4 })?
        .value
        .re;
    Ok(ContinuityReport {
        base,
        rows,
        observed_order,
        first_derivative: richardson(&d1),
        second_derivative: richardson(&d2),
        second_moment,
    })
}

/// Compression to bosonic levels `< nb` of `f(sum_k a_k x_k)`, from tensor
/// Gauss-Hermite quadrature with `order` nodes per mode. Rows and columns use
/// the bosonic index `sum_k n_k nb^k`.
pub fn multiplication_operator(amps: &[f64], s: &[f64], tau2: f64, nb: usize, f: &TestFunction, order: usize) -> Result<DMatrix<f64>> {
    check_len(amps.len(), s.len())?;
    let n = amps.len();
    let (y, w) = gauss_hermite(order)?;
    let q = y.len();
    let total = (q as u128).pow(n as u32);
    if total > (1u128 << 26) {
        return Err(Error::Capacity {
            what: "quadrature grid",
            requested: total,
            cap: 1 << 26,
        });
    }
    let scales: Vec<f64> = amps.iter().zip(s).map(|(a, s)| a * (tau2 / s).sqrt()).collect();
    let mut t = vec![0.0; total as usize];
    let mut idx = vec![0usize; n];
    for v in t.iter_mut() {
        let r: f64 = (0..n).map(|k| scales[k] * y[idx[k]]).sum();
        *v = f.eval(r).re;
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
        }
    }
    // W[p, g] with p = level * nb + level'
    let h: Vec<Vec<f64>> = y.iter().map(|&yk| normalized_hermite(nb, yk)).collect();
    let p2 = nb * nb;
    let mut weights = vec![0.0; p2 * q];
    for g in 0..q {
        for a in 0..nb {
            for b in 0..nb {
                weights[(a * nb + b) * q + g] = w[g] * h[g][a] * h[g][b];
            }
        }
    }
    // contract the fastest axis each round, appending the level pair as slowest
    let mut cur = t;
    let mut rest = total as usize / q;
    for _ in 0..n {
        let mut next = vec![0.0; rest * p2];
        for r in 0..rest {
            let src = &cur[r * q..(r + 1) * q];
            for p in 0..p2 {
                let wp = &weights[p * q..(p + 1) * q];
                next[r + rest * p] = src.iter().zip(wp).map(|(a, b)| a * b).sum();
            }
        }
        cur = next;
        rest = rest * p2 / q;
        if rest == 0 {
            rest = 1;
        }
    }
    let bd = nb.pow(n as u32);
    let mut m = DMatrix::zeros(bd, bd);
    for (flat, &v) in cur.iter().enumerate() {
        let mut rem = flat;
        let (mut row, mut col, mut stride) = (0, 0, 1);
        for _ in 0..n {
            let p = rem % p2;
            rem /= p2;
            row += (p / nb) * stride;
            col += (p % nb) * stride;
            stride *= nb;
        }
        m[(row, col)] = v;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorSample {
    pub n: usize,
    /// Norm of the interior compression of `[B, M_f]`.
    pub norm: f64,
    /// `tau2 ||f'||_inf (sum_{k<n} ||xi_k||_inf^2)^{1/2}`.
    pub bound: f64,
    pub sum_xi2: f64,
}

/// Interior-compressed `||[B, M_f(point)]||` for truncations `n` in `ns`,
/// with `nb` bosonic levels per mode.
pub fn commutator_norm_profile(
    basis: &ModeBasis,
    nb: usize,
    tau2: f64,
    f: &TestFunction,
    point: &[f64],
    ns: &[usize],
    order: usize,
) -> Result<Vec<CommutatorSample>> {
    let amps_all = basis.eval_all(point)?;
    let s_all = basis.weights();
    let xi_all = basis.supnorms();
    let fprime = f.derivative_bound(1);
    let mut out = Vec::new();
    for &n in ns {
        if n == 0 || n > basis.len() {
            return Err(invalid("n", format!("{n} not in 1..={}", basis.len())));
        }
        let fock = FockSpec::new(n, nb, tau2, s_all[..n].to_vec())?;
        let fmat = multiplication_operator(&amps_all[..n], &s_all[..n], tau2, nb, f, order)?;
        let norm = compressed_commutator_norm(&fock, &fmat)?;
        let sum_xi2: f64 = xi_all[..n].iter().map(|x| x * x).sum();
        out.push(CommutatorSample {
            n,
            norm,
            bound: tau2 * fprime * sum_xi2.sqrt(),
            sum_xi2,
        });
    }
    Ok(out)
}

fn compressed_commutator_norm(fock: &FockSpec, fmat: &DMatrix<f64>) -> Result<f64> {
    let b = assemble_b(fock)?;
    let fd = fock.fermion_dim();
    let bd = fock.boson_dim();
    let nb = fock.nb();
    let interior_bosons: Vec<usize> = (0..bd)
        .filter(|&bi| {
            let mut r = bi;
            (0..fock.n()).all(|_| {
                let ok = r % nb + 1 < nb;
                r /= nb;
                ok
            })
        })
        .collect();
    let ib = interior_bosons.len();
    let f_cols = DMatrix::from_fn(bd, ib, |r, c| fmat[(r, interior_bosons[c])]);
    let f_rows = DMatrix::from_fn(ib, bd, |r, c| fmat[(interior_bosons[r], c)]);
    let dim = ib * fd;
    let dimfull = fock.dim();
    let embed = |v: &[C64]| {
        let mut u = vec![ZERO; dimfull];
        for (k, &bi) in interior_bosons.iter().enumerate() {
            u[bi * fd..(bi + 1) * fd].copy_from_slice(&v[k * fd..(k + 1) * fd]);
        }
        u
    };
    // i [B, F] restricted to the interior
    let matvec = |v: &[C64], out: &mut [C64]| {
        let vm = DMatrix::from_fn(ib, fd, |r, c| v[r * fd + c]);
        let fv = f_cols.map(|x| C64::new(x, 0.0)) * &vm;
        let fv_flat: Vec<C64> = (0..dimfull).map(|i| fv[(i / fd, i % fd)]).collect();
        let bfv = b.apply(&fv_flat).expect("dimensions match");
        let u = embed(v);
        let bu = b.apply(&u).expect("dimensions match");
        let bum = DMatrix::from_fn(bd, fd, |r, c| bu[r * fd + c]);
        let fbu = f_rows.map(|x| C64::new(x, 0.0)) * bum;
        for (k, &bi) in interior_bosons.iter().enumerate() {
            for c in 0..fd {
                let val = bfv[bi * fd + c] - fbu[(k, c)];
                out[k * fd + c] = val * C64::new(0.0, 1.0);
            }
        }
    };
    let (lo, hi) = extremal_eigenvalues(dim, &matvec, 120, 7);
    Ok(lo.abs().max(hi.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_basis::{build_basis, SobolevParams, TorusGeometry, WeightRule};

    fn basis(n: usize) -> ModeBasis {
        build_basis(
            TorusGeometry::new(1, 2.0 * PI).unwrap(),
            SobolevParams::new(1.0, 1.0).unwrap(),
            n,
            WeightRule::Massive { mass: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fs = [
            TestFunction::Polynomial(vec![1.0, -2.0, 0.5, 0.3, -0.1]),
            TestFunction::Exponential { t: 1.3 },
            TestFunction::Sine { t: 0.7, phase: 0.4 },
            TestFunction::bump(0.8, 0.3).unwrap(),
        ];
        let h = 1e-4;
        for f in &fs {
            for order in 1..=3 {
                for &r in &[-1.1, 0.0, 0.37, 2.2] {
                    let fd = (f.derivative(order - 1, r + h) - f.derivative(order - 1, r - h)) / (2.0 * h);
                    let an = f.derivative(order, r);
                    assert!((fd - an).norm() < 1e-6 * (1.0 + an.norm()), "{f:?} order {order} at {r}");
                }
            }
        }
    }

    #[test]
    fn bump_bounds_are_attained_sups() {
        let f = TestFunction::bump(0.6, -0.2).unwrap();
        for order in 0..=3 {
            let grid_max = (0..200001)
                .map(|i| -0.2 + (i as f64 - 100000.0) * 1e-5)
                .map(|r| f.derivative(order, r).norm())
                .fold(0.0, f64::max);
            let b = f.derivative_bound(order);
            assert!(grid_max <= b * (1.0 + 1e-12));
            assert!(grid_max >= b * (1.0 - 1e-6), "order {order}: {grid_max} vs {b}");
        }
    }

    #[test]
    fn polynomial_degree_cap() {
        assert!(TestFunction::polynomial(vec![0.0; 6]).is_err());
        assert_eq!(TestFunction::polynomial(vec![0.0, 0.0, 1.0, 0.0]).unwrap().degree(), Some(2));
    }

    #[test]
    fn quad_spec_parsing() {
        assert_eq!("gh:20".parse::<QuadratureSpec>().unwrap(), QuadratureSpec::GaussHermite { order: 20 });
        assert!("gh:1".parse::<QuadratureSpec>().is_err());
        assert!("mc:0".parse::<QuadratureSpec>().is_err());
        assert!("xx:3".parse::<QuadratureSpec>().is_err());
        assert!(QuadratureSpec::MonteCarlo { samples: 10, seed: None }.validate().is_err());
    }

    #[test]
    fn constant_is_one() {
        let b = basis(3);
        let fock = FockSpec::new(3, 4, 1.0, b.weights()).unwrap();
        let e = expectation_ground(&b, &fock, &TestFunction::Constant(1.0), &[0.4], QuadratureSpec::GaussHermite { order: 8 }).unwrap();
        assert_eq!(e.value, C64::new(1.0, 0.0));
    }

    #[test]
    fn low_order_rejected_for_quartic() {
        let f = TestFunction::Polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(gaussian_expectation(&[1.0], &[1.0], 1.0, &f, QuadratureSpec::GaussHermite { order: 2 }).is_err());
        assert!(gaussian_expectation(&[1.0], &[1.0], 1.0, &f, QuadratureSpec::GaussHermite { order: 3 }).is_ok());
    }

    #[test]
    fn mismatched_weights_rejected() {
        let b = basis(2);
        let fock = FockSpec::new(2, 4, 1.0, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            expectation_ground(&b, &fock, &TestFunction::Constant(1.0), &[0.0], QuadratureSpec::GaussHermite { order: 4 }),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn collapsed_route_matches_tensor_route() {
        let amps = [0.3, -0.2, 0.5];
        let s = [1.0f64, 2.0, 2.5];
        let scales: Vec<f64> = amps.iter().zip(&s).map(|(a, s)| a * (1.0 / s).sqrt()).collect();
        let (y, w) = gauss_hermite(40).unwrap();
        let padded_amps = [0.3, -0.2, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let padded_s = [1.0, 2.0, 2.5, 1.0, 1.0, 1.0, 1.0, 1.0];
        let quartic = TestFunction::Polynomial(vec![0.5, -1.0, 0.25, 2.0, 1.0]);
        let bump = TestFunction::bump(0.7, 0.2).unwrap();
        for (f, tol) in [(quartic, 1e-12), (bump, 1e-6)] {
            let tensor = tensor_gh(&scales, &y, &w, &f);
            let collapsed = gaussian_expectation(&padded_amps, &padded_s, 1.0, &f, QuadratureSpec::GaussHermite { order: 40 }).unwrap();
            assert!((tensor - collapsed.value).norm() < tol, "{f:?}");
        }
    }

    #[test]
    fn multiplication_operator_of_position() {
        // f(r) = r with a single mode gives x = (q + q^dag) / (2 sqrt(s))
        let s = 2.0;
        let m = multiplication_operator(&[1.0], &[s], 1.0, 4, &TestFunction::Polynomial(vec![0.0, 1.0]), 8).unwrap();
        for k in 1..4 {
            let expect = (2.0 * k as f64).sqrt() / (2.0 * s.sqrt());
            assert!((m[(k - 1, k)] - expect).abs() < 1e-13);
            assert!((m[(k, k - 1)] - expect).abs() < 1e-13);
        }
        assert!(m[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn multiplication_operator_two_mode_layout() {
        // f(r) = r with two modes: the second mode acts with stride nb
        let m = multiplication_operator(&[0.0, 1.0], &[1.0, 1.0], 1.0, 3, &TestFunction::Polynomial(vec![0.0, 1.0]), 6).unwrap();
        assert!((m[(0, 3)] - 2f64.sqrt() / 2.0).abs() < 1e-13);
        assert!(m[(0, 1)].abs() < 1e-13);
    }
}
