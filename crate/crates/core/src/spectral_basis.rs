//! Laplacian eigenbasis on flat tori with Sobolev weighting.
//!
//! Modes are real products of `1/sqrt(L)`, `sqrt(2/L) cos` and `sqrt(2/L) sin`
//! factors, one per axis, with non-negative integer wavevector components.
//! Each weighted mode is `xi = e / (1 + tau1 * lambda^sigma)`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{check_index, check_len, invalid, Error, Result};
use crate::numfmt::sig17;
use crate::quadrature::simpson;

/// Hard cap on the number of modes a basis may hold.
pub const MAX_MODES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGeometry {
    d: usize,
    length: f64,
}

impl TorusGeometry {
    pub fn new(d: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(invalid("d", format!("dimension {d} not in 1..=3")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("L", format!("circumference {length} must be positive")));
        }
        Ok(TorusGeometry { d, length })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.d as i32)
    }

    /// Reduces each coordinate into `[0, L)`.
    pub fn wrap(&self, point: &[f64]) -> Vec<f64> {
        point.iter().map(|&x| x.rem_euclid(self.length)).collect()
    }

    /// Largest per-axis periodic distance between two points.
    pub fn periodic_gap(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let r = (x - y).rem_euclid(self.length);
                r.min(self.length - r)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevParams {
    tau1: f64,
    sigma: f64,
}

impl SobolevParams {
    pub fn new(tau1: f64, sigma: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau1.is_finite()) {
            return Err(invalid("tau1", format!("{tau1} must be positive")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("{sigma} must be positive")));
        }
        Ok(SobolevParams { tau1, sigma })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1 + tau1 * lambda^sigma`.
    pub fn factor(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            1.0
        } else {
            1.0 + self.tau1 * lambda.powf(self.sigma)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightRule {
    /// `s = sqrt(p^2 + m^2)`.
    Massive { mass: f64 },
    /// `s = max(p, floor)`; without a floor the zero mode must be excluded.
    Photon { floor: Option<f64> },
    /// Explicit weights, consumed in mode order.
    Custom(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZeroMode {
    #[default]
    Include,
    Exclude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxisParity {
    Const,
    Cos,
    Sin,
}

impl AxisParity {
    fn label(self) -> &'static str {
        match self {
            AxisParity::Const => "const",
            AxisParity::Cos => "cos",
            AxisParity::Sin => "sin",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub index: usize,
    pub k: Vec<u32>,
    pub parity: Vec<AxisParity>,
    pub lambda: f64,
    pub s: f64,
    /// `||e||_inf`, the unweighted sup norm.
    pub l2_supnorm: f64,
    /// `||xi||_inf`.
    pub supnorm: f64,
    /// `1 + tau1 * lambda^sigma`.
    pub sobolev_factor: f64,
}

impl Mode {
    pub fn k_norm_sq(&self) -> u64 {
        self.k.iter().map(|&k| (k as u64) * (k as u64)).sum()
    }

    pub fn momentum(&self, length: f64) -> f64 {
        2.0 * PI / length * (self.k_norm_sq() as f64).sqrt()
    }

    /// `+1` if `xi(-m) = xi(m)`, `-1` if odd.
    pub fn reflection_sign(&self) -> f64 {
        let sins = self.parity.iter().filter(|&&p| p == AxisParity::Sin).count();
        if sins % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_even(&self) -> bool {
        self.reflection_sign() > 0.0
    }

    /// Unweighted `e(point)`.
    pub fn eval_l2(&self, length: f64, point: &[f64]) -> f64 {
        let w = 2.0 * PI / length;
        self.k
            .iter()
            .zip(&self.parity)
            .zip(point)
            .map(|((&k, &p), &x)| match p {
                AxisParity::Const => 1.0 / length.sqrt(),
                AxisParity::Cos => (2.0 / length).sqrt() * (w * k as f64 * x).cos(),
                AxisParity::Sin => (2.0 / length).sqrt() * (w * k as f64 * x).sin(),
            })
            .product()
    }
}

fn canonical_order(a: &Mode, b: &Mode) -> Ordering {
    a.k_norm_sq()
        .cmp(&b.k_norm_sq())
        .then_with(|| a.k.cmp(&b.k))
        .then_with(|| a.parity.cmp(&b.parity))
}

/// Coefficients of `sum_i x_i xi_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig {
    pub coeffs: Vec<f64>,
}

impl FieldConfig {
    pub fn new(coeffs: Vec<f64>) -> Self {
        FieldConfig { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        FieldConfig { coeffs: vec![0.0; n] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        FieldConfig { coeffs: c }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasis {
    geometry: TorusGeometry,
    params: SobolevParams,
    weight_rule: WeightRule,
    zero_mode: ZeroMode,
    modes: Vec<Mode>,
}

pub fn build_basis(
    geometry: TorusGeometry,
    params: SobolevParams,
    n: usize,
    weight_rule: WeightRule,
) -> Result<ModeBasis> {
    ModeBasis::build(geometry, params, n, weight_rule, ZeroMode::Include)
}

impl ModeBasis {
    pub fn build(
        geometry: TorusGeometry,
        params: SobolevParams,
        n: usize,
        weight_rule: WeightRule,
        zero_mode: ZeroMode,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one mode"));
        }
        if n > MAX_MODES {
            return Err(Error::Capacity {
                what: "modes",
                requested: n as u128,
                cap: MAX_MODES as u128,
            });
        }
        match &weight_rule {
            WeightRule::Massive { mass } => {
                if !(mass.is_finite() && *mass >= 0.0) {
                    return Err(invalid("mass", format!("{mass} must be non-negative")));
                }
                if *mass == 0.0 && zero_mode == ZeroMode::Include {
                    return Err(invalid("mass", "massless rule needs the zero mode excluded"));
                }
            }
            WeightRule::Photon { floor } => match floor {
                Some(f) if !(f.is_finite() && *f > 0.0) => {
                    return Err(invalid("floor", format!("{f} must be positive")));
                }
                None if zero_mode == ZeroMode::Include => {
                    return Err(invalid(
                        "weight",
                        "photon weights vanish on the constant mode; set a floor or exclude it",
                    ));
                }
                _ => {}
            },
            WeightRule::Custom(w) => {
                if w.len() < n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: w.len(),
                    });
                }
                if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                    return Err(invalid("weight", format!("custom weight {bad} must be positive")));
                }
            }
        }

        let d = geometry.d;
        let wanted = n + usize::from(zero_mode == ZeroMode::Exclude);
        let mut r2: u64 = 1;
        let mut modes = loop {
            let candidate = enumerate_shells(d, r2);
            if candidate.len() >= wanted {
                break candidate;
            }
            r2 *= 2;
        };
        modes.sort_by(canonical_order);
        if zero_mode == ZeroMode::Exclude {
            modes.remove(0);
        }
        modes.truncate(n);

        let length = geometry.length;
        let kscale = (2.0 * PI / length).powi(2);
        for (i, m) in modes.iter_mut().enumerate() {
            m.index = i;
            m.lambda = kscale * m.k_norm_sq() as f64;
            let p = m.momentum(length);
            m.s = match &weight_rule {
                WeightRule::Massive { mass } => (p * p + mass * mass).sqrt(),
                WeightRule::Photon { floor } => p.max(floor.unwrap_or(0.0)),
                WeightRule::Custom(w) => w[i],
            };
            m.l2_supnorm = m
                .parity
                .iter()
                .map(|p| match p {
                    AxisParity::Const => 1.0 / length.sqrt(),
                    _ => (2.0 / length).sqrt(),
                })
                .product();
            m.sobolev_factor = params.factor(m.lambda);
            m.supnorm = m.l2_supnorm / m.sobolev_factor;
        }

        if let WeightRule::Custom(_) = weight_rule {
            for parity in [true, false] {
                let class: Vec<f64> = modes.iter().filter(|m| m.is_even() == parity).map(|m| m.s).collect();
                if class.windows(2).any(|w| w[1] < w[0]) {
                    return Err(invalid("weight", "custom weights must be non-decreasing within each parity class"));
                }
            }
        }

        Ok(ModeBasis {
            geometry,
            params,
            weight_rule,
            zero_mode,
            modes,
        })
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    pub fn params(&self) -> SobolevParams {
        self.params
    }

    pub fn weight_rule(&self) -> &WeightRule {
        &self.weight_rule
    }

    pub fn zero_mode(&self) -> ZeroMode {
        self.zero_mode
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> Result<&Mode> {
        check_index(i, self.modes.len())?;
        Ok(&self.modes[i])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.s).collect()
    }

    pub fn supnorms(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.supnorm).collect()
    }

    /// Basis restricted to its first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<ModeBasis> {
        if n == 0 || n > self.len() {
            return Err(invalid("n", format!("{n} not in 1..={}", self.len())));
        }
        let mut out = self.clone();
        out.modes.truncate(n);
        Ok(out)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        check_len(self.geometry.d, point.len())
    }

    /// `xi_i(point)`.
    pub fn eval_mode(&self, i: usize, point: &[f64]) -> Result<f64> {
        let m = self.mode(i)?;
        self.check_point(point)?;
        let p = self.geometry.wrap(point);
        Ok(m.eval_l2(self.geometry.length, &p) / m.sobolev_factor)
    }

    /// `xi_i(-point)`.
    pub fn eval_reflected(&self, i: usize, point: &[f64]) -> Result<f64> {
        Ok(self.mode(i)?.reflection_sign() * self.eval_mode(i, point)?)
    }

    /// All `xi_i(point)` in mode order.
    pub fn eval_all(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_point(point)?;
        let p = self.geometry.wrap(point);
        Ok(self
            .modes
            .iter()
            .map(|m| m.eval_l2(self.geometry.length, &p) / m.sobolev_factor)
            .collect())
    }

    /// The Sobolev product of two configurations; the weighted modes are
    /// orthonormal for it, so this is the coefficient dot product.
    pub fn sobolev_inner(&self, a: &FieldConfig, b: &FieldConfig) -> Result<f64> {
        check_len(self.len(), a.len())?;
        check_len(self.len(), b.len())?;
        Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum())
    }

    /// `sum_i x_i xi_i(point)`.
    pub fn reconstruct(&self, config: &FieldConfig, point: &[f64]) -> Result<f64> {
        check_len(self.len(), config.len())?;
        let xi = self.eval_all(point)?;
        Ok(config.coeffs.iter().zip(&xi).map(|(x, v)| x * v).sum())
    }

    pub fn max_k(&self) -> u32 {
        self.modes.iter().flat_map(|m| m.k.iter().copied()).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,k,parity,lambda,s,supnorm\n");
        for m in &self.modes {
            let k: Vec<String> = m.k.iter().map(|k| k.to_string()).collect();
            let p: Vec<&str> = m.parity.iter().map(|p| p.label()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                m.index,
                k.join(";"),
                p.join(";"),
                sig17(m.lambda),
                sig17(m.s),
                sig17(m.supnorm)
            );
        }
        s
    }

    /// Exponent `alpha` of the weight growth `s ~ p^alpha`.
    pub fn weight_exponent(&self) -> f64 {
        match &self.weight_rule {
            WeightRule::Massive { .. } | WeightRule::Photon { .. } => 1.0,
            WeightRule::Custom(_) => {
                let pts: Vec<(f64, f64)> = self
                    .modes
                    .iter()
                    .filter(|m| m.k_norm_sq() > 0)
                    .map(|m| ((m.k_norm_sq() as f64).sqrt().ln(), m.s.ln()))
                    .collect();
                let start = pts.len() / 2;
                fit_slope(&pts[start..]).unwrap_or(0.0)
            }
        }
    }

    pub fn convergence_report(&self) -> ConvergenceReport {
        let d = self.geometry.d;
        let sigma = self.params.sigma;
        let alpha = self.weight_exponent();
        let sum_sinv_xi2 = self.modes.iter().map(|m| m.supnorm * m.supnorm / m.s).sum();
        let sum_xi2 = self.modes.iter().map(|m| m.supnorm * m.supnorm).sum();
        let shell16 = (d as f64 - 1.0) - alpha - 4.0 * sigma;
        let shell27 = (d as f64 - 1.0) - 4.0 * sigma;
        let verdict = |p: f64| {
            if p < -1.0 {
                Verdict::Converges
            } else {
                Verdict::Diverges
            }
        };
        let v16 = verdict(shell16);
        let v27 = verdict(shell27);
        let tail16 = if v16 == Verdict::Converges {
            self.tail_integral(true, shell16)
        } else {
            f64::INFINITY
        };
        let tail27 = if v27 == Verdict::Converges {
            self.tail_integral(false, shell27)
        } else {
            f64::INFINITY
        };
        ConvergenceReport {
            modes: self.len(),
            weight_exponent: alpha,
            sum_sinv_xi2,
            sum_xi2,
            condition16: ConditionReport {
                partial_sum: sum_sinv_xi2,
                tail_estimate: tail16,
                shell_exponent: shell16,
                verdict: v16,
            },
            condition27: ConditionReport {
                partial_sum: sum_xi2,
                tail_estimate: tail27,
                shell_exponent: shell27,
                verdict: v27,
            },
        }
    }

    /// Continuum estimate of the sum over all modes beyond the truncation.
    fn tail_integral(&self, with_weight: bool, shell_exponent: f64) -> f64 {
        let d = self.geometry.d;
        let length = self.geometry.length;
        let last = self.modes.last().expect("non-empty basis");
        let k_last = (last.k_norm_sq() as f64).sqrt();
        let k0 = k_last + 0.5;
        let alpha = self.weight_exponent();
        let s_last = last.s;
        let rule = self.weight_rule.clone();
        let params = self.params;
        let amp = (2.0 / length).powi(d as i32);
        let density = move |k: f64| match d {
            1 => 2.0,
            2 => 2.0 * PI * k,
            _ => 4.0 * PI * k * k,
        };
        let weight = move |k: f64| -> f64 {
            let p = 2.0 * PI * k / length;
            match &rule {
                WeightRule::Massive { mass } => (p * p + mass * mass).sqrt(),
                WeightRule::Photon { floor } => p.max(floor.unwrap_or(0.0)),
                WeightRule::Custom(_) => {
                    if k_last > 0.0 {
                        s_last * (k / k_last).powf(alpha)
                    } else {
                        s_last
                    }
                }
            }
        };
        let integrand = |k: f64| {
            let p = 2.0 * PI * k / length;
            let f = params.factor(p * p);
            let base = density(k) * amp / (f * f);
            if with_weight {
                base / weight(k)
            } else {
                base
            }
        };
        // k = k0 * e^u
        let umax = 50.0;
        let body = simpson(|u| integrand(k0 * u.exp()) * k0 * u.exp(), 0.0, umax, 4000);
        let kmax = k0 * umax.exp();
        let remainder = integrand(kmax) * kmax / (-(shell_exponent + 1.0));
        body + remainder.max(0.0)
    }
}

fn enumerate_shells(d: usize, r2: u64) -> Vec<Mode> {
    let r = (r2 as f64).sqrt().floor() as u32 + 1;
    let mut out = Vec::new();
    let mut k = vec![0u32; d];
    loop {
        let n2: u64 = k.iter().map(|&x| (x as u64) * (x as u64)).sum();
        if n2 <= r2 {
            let nz: Vec<usize> = (0..d).filter(|&a| k[a] > 0).collect();
            for mask in 0..(1u32 << nz.len()) {
                let mut parity = vec![AxisParity::Const; d];
                for (bit, &a) in nz.iter().enumerate() {
                    parity[a] = if mask >> (nz.len() - 1 - bit) & 1 == 0 {
                        AxisParity::Cos
                    } else {
                        AxisParity::Sin
                    };
                }
                out.push(Mode {
                    index: 0,
                    k: k.clone(),
                    parity,
                    lambda: 0.0,
                    s: 0.0,
                    l2_supnorm: 0.0,
                    supnorm: 0.0,
                    sobolev_factor: 1.0,
                });
            }
        }
        let mut a = 0;
        loop {
            if a == d {
                return out;
            }
            k[a] += 1;
            if k[a] <= r {
                break;
            }
            k[a] = 0;
            a += 1;
        }
    }
}

/// Least-squares slope through `(x, y)` points.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converges,
    Diverges,
}

impl Verdict {
    pub fn passes(self) -> bool {
        self == Verdict::Converges
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub partial_sum: f64,
    /// Estimated remainder beyond the truncation; infinite when divergent.
    pub tail_estimate: f64,
    /// Power `p` with per-unit-radius increments decaying like `k^p`.
    pub shell_exponent: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub modes: usize,
    pub weight_exponent: f64,
    /// `sum_i ||xi_i||^2 / s_i`.
    pub sum_sinv_xi2: f64,
    /// `sum_i ||xi_i||^2`.
    pub sum_xi2: f64,
    /// Summability of `||xi||^2 / s`, needed by the Gaussian measure.
    pub condition16: ConditionReport,
    /// Summability of `||xi||^2`, needed for bounded commutators.
    pub condition27: ConditionReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis(d: usize, n: usize) -> ModeBasis {
        build_basis(
            TorusGeometry::new(d, 2.0 * PI).unwrap(),
            SobolevParams::new(1.0, 1.0).unwrap(),
            n,
            WeightRule::Massive { mass: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn first_modes_d1() {
        let b = basis(1, 5);
        let m = b.modes();
        assert_eq!(m[0].parity, vec![AxisParity::Const]);
        assert_eq!((m[1].k[0], m[1].parity[0]), (1, AxisParity::Cos));
        assert_eq!((m[2].k[0], m[2].parity[0]), (1, AxisParity::Sin));
        assert_eq!((m[3].k[0], m[3].parity[0]), (2, AxisParity::Cos));
        assert!((m[0].supnorm - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((m[1].supnorm - 0.5 / PI.sqrt()).abs() < 1e-15);
        assert_eq!(m[1].lambda, 1.0);
        assert!((m[1].s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn d2_shell_ordering() {
        let b = basis(2, 9);
        let ks: Vec<(Vec<u32>, Vec<AxisParity>)> = b.modes().iter().map(|m| (m.k.clone(), m.parity.clone())).collect();
        assert_eq!(ks[0].0, vec![0, 0]);
        assert_eq!(ks[1], (vec![0, 1], vec![AxisParity::Const, AxisParity::Cos]));
        assert_eq!(ks[2], (vec![0, 1], vec![AxisParity::Const, AxisParity::Sin]));
        assert_eq!(ks[3].0, vec![1, 0]);
        assert_eq!(ks[5], (vec![1, 1], vec![AxisParity::Cos, AxisParity::Cos]));
        assert_eq!(ks[8], (vec![1, 1], vec![AxisParity::Sin, AxisParity::Sin]));
    }

    #[test]
    fn photon_without_floor_needs_zero_mode_excluded() {
        let g = TorusGeometry::new(1, 1.0).unwrap();
        let p = SobolevParams::new(1.0, 1.0).unwrap();
        assert!(build_basis(g, p, 3, WeightRule::Photon { floor: None }).is_err());
        let b = ModeBasis::build(g, p, 3, WeightRule::Photon { floor: None }, ZeroMode::Exclude).unwrap();
        assert!((b.modes()[0].s - 2.0 * PI).abs() < 1e-14);
        let f = build_basis(g, p, 3, WeightRule::Photon { floor: Some(0.5) }).unwrap();
        assert_eq!(f.modes()[0].s, 0.5);
    }

    #[test]
    fn capacity_and_parameter_errors() {
        let g = TorusGeometry::new(1, 1.0).unwrap();
        let p = SobolevParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            build_basis(g, p, MAX_MODES + 1, WeightRule::Massive { mass: 1.0 }),
            Err(Error::Capacity { .. })
        ));
        assert!(build_basis(g, p, 0, WeightRule::Massive { mass: 1.0 }).is_err());
        assert!(TorusGeometry::new(4, 1.0).is_err());
        assert!(TorusGeometry::new(1, 0.0).is_err());
        assert!(SobolevParams::new(0.0, 1.0).is_err());
        assert!(SobolevParams::new(1.0, -1.0).is_err());
        assert!(build_basis(g, p, 3, WeightRule::Custom(vec![1.0, 2.0])).is_err());
        assert!(build_basis(g, p, 3, WeightRule::Custom(vec![1.0, 3.0, 2.0])).is_ok());
        assert!(build_basis(g, p, 4, WeightRule::Custom(vec![1.0, 3.0, 2.0, 2.5])).is_err());
    }

    #[test]
    fn eval_and_periodicity() {
        let b = basis(1, 3);
        assert!((b.eval_mode(0, &[1.234]).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!(b.eval_mode(1, &[PI / 2.0]).unwrap().abs() < 1e-16);
        assert!((b.eval_mode(2, &[0.7]).unwrap() - b.eval_mode(2, &[0.7 + 2.0 * PI]).unwrap()).abs() < 1e-14);
        assert!(b.eval_mode(3, &[0.0]).is_err());
        assert!(b.eval_mode(0, &[0.0, 0.0]).is_err());
        assert_eq!(b.eval_reflected(2, &[0.7]).unwrap(), -b.eval_mode(2, &[0.7]).unwrap());
    }

    #[test]
    fn tiny_tau1_leaves_supnorm_unweighted() {
        let b = build_basis(
            TorusGeometry::new(2, 2.0 * PI).unwrap(),
            SobolevParams::new(1e-300, 1.0).unwrap(),
            6,
            WeightRule::Massive { mass: 1.0 },
        )
        .unwrap();
        for m in b.modes() {
            assert_eq!(m.supnorm, m.l2_supnorm);
        }
    }

    #[test]
    fn sobolev_inner_examples() {
        let b = basis(1, 2);
        let e0 = FieldConfig::unit(2, 0);
        let e1 = FieldConfig::unit(2, 1);
        assert_eq!(b.sobolev_inner(&e0, &e0).unwrap(), 1.0);
        assert_eq!(b.sobolev_inner(&e0, &e1).unwrap(), 0.0);
        assert_eq!(b.sobolev_inner(&FieldConfig::new(vec![1.0, 2.0]), &FieldConfig::new(vec![3.0, 4.0])).unwrap(), 11.0);
        assert!(b.sobolev_inner(&e0, &FieldConfig::zeros(3)).is_err());
    }

    #[test]
    fn single_mode_report() {
        let b = basis(1, 1);
        let r = b.convergence_report();
        let m = &b.modes()[0];
        assert_eq!(r.sum_sinv_xi2, m.supnorm * m.supnorm / m.s);
        assert_eq!(r.sum_xi2, m.supnorm * m.supnorm);
    }

    #[test]
    fn verdicts_by_dimension() {
        let mk = |d, sigma| {
            build_basis(
                TorusGeometry::new(d, 2.0 * PI).unwrap(),
                SobolevParams::new(1.0, sigma).unwrap(),
                20,
                WeightRule::Massive { mass: 1.0 },
            )
            .unwrap()
            .convergence_report()
        };
        assert!(mk(1, 1.0).condition16.verdict.passes());
        assert!(mk(3, 1.0).condition16.verdict.passes());
        assert!(!mk(3, 0.5).condition16.verdict.passes());
        assert!(!mk(3, 0.5).condition27.verdict.passes());
        assert!(mk(3, 1.0).condition27.verdict.passes());
        assert!(mk(1, 1.0).condition16.tail_estimate.is_finite());
        assert!(mk(3, 0.5).condition16.tail_estimate.is_infinite());
    }

    #[test]
    fn tail_estimate_tracks_true_remainder() {
        // d = 1: compare the integral estimate against the explicit sum to a far cutoff
        let b = basis(1, 21);
        let far = basis(1, 20001).convergence_report().sum_sinv_xi2;
        let r = b.convergence_report();
        let remainder = far - r.sum_sinv_xi2;
        let est = r.condition16.tail_estimate;
        assert!((est - remainder).abs() < 0.05 * remainder, "{est} vs {remainder}");
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = basis(2, 3).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,k,parity,lambda,s,supnorm");
        assert!(lines[2].starts_with("1,0;1,const;cos,"));
        assert_eq!(lines.len(), 4);
    }

    proptest! {
        #[test]
        fn rebuild_is_identical(d in 1usize..=3, n in 1usize..200) {
            prop_assert_eq!(basis(d, n), basis(d, n));
        }

        #[test]
        fn sorted_and_weights_monotone(d in 1usize..=3, n in 1usize..200) {
            let b = basis(d, n);
            for w in b.modes().windows(2) {
                prop_assert_eq!(canonical_order(&w[0], &w[1]), Ordering::Less);
                prop_assert!(w[0].lambda <= w[1].lambda);
                prop_assert!(w[0].s <= w[1].s);
            }
        }

        #[test]
        fn prefix_property(d in 1usize..=3, n in 1usize..100, extra in 1usize..50) {
            let a = basis(d, n);
            let b = basis(d, n + extra);
            prop_assert_eq!(a.modes(), &b.modes()[..n]);
        }

        #[test]
        fn sobolev_inner_symmetric_bilinear(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
            c in -3.0f64..3.0,
        ) {
            let basis = basis(1, 4);
            let fa = FieldConfig::new(a.clone());
            let fb = FieldConfig::new(b.clone());
            prop_assert_eq!(basis.sobolev_inner(&fa, &fb).unwrap(), basis.sobolev_inner(&fb, &fa).unwrap());
            let scaled = FieldConfig::new(a.iter().map(|x| c * x).collect());
            let lhs = basis.sobolev_inner(&scaled, &fb).unwrap();
            let rhs = c * basis.sobolev_inner(&fa, &fb).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            prop_assert!(basis.sobolev_inner(&fa, &fa).unwrap() >= 0.0);
        }
    }
}
