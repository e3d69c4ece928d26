//! Parallel transport of Lie-algebra valued connections along flows of
//! vector fields on the torus `[0, L)^d`.
//!
//! Transport solves `dH/dt = A(gamma') H`, so later segments multiply from
//! the left and a gauge transformation `g` acts as
//! `H -> g(end) H g(start)^{-1}` with `A -> g A g^{-1} + (dg) g^{-1}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{check_len, invalid, Error, Result};
use crate::lie::{bracket, expm_anti_hermitian, polar_unitary, GaugeGroup, LieStructure};
use crate::numfmt::sig17;
use crate::operator::{C64, ZERO};
use crate::spectral_basis::TorusGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Harmonic {
    Cos,
    Sin,
}

impl Harmonic {
    fn value(self, phase: f64) -> f64 {
        match self {
            Harmonic::Cos => phase.cos(),
            Harmonic::Sin => phase.sin(),
        }
    }

    fn slope(self, phase: f64) -> f64 {
        match self {
            Harmonic::Cos => -phase.sin(),
            Harmonic::Sin => phase.cos(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Harmonic::Cos => "cos",
            Harmonic::Sin => "sin",
        }
    }
}

impl std::str::FromStr for Harmonic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" => Ok(Harmonic::Cos),
            "sin" => Ok(Harmonic::Sin),
            other => Err(invalid("harmonic", format!("`{other}` is not cos or sin"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm {
    pub k: Vec<i32>,
    pub harmonic: Harmonic,
    pub coeff: f64,
}

fn phase(k: &[i32], length: f64, point: &[f64]) -> f64 {
    let w = 2.0 * PI / length;
    k.iter().zip(point).map(|(&k, &x)| w * k as f64 * x).sum()
}

/// `sum c * cos|sin(2 pi / L * k . m)` on `[0, L)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    geometry: TorusGeometry,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(geometry: TorusGeometry, terms: Vec<TrigTerm>) -> Result<Self> {
        for t in &terms {
            check_len(geometry.d(), t.k.len())?;
            if !t.coeff.is_finite() {
                return Err(invalid("coeff", "trig coefficients must be finite"));
            }
        }
        Ok(TrigPolynomial { geometry, terms })
    }

    pub fn constant(geometry: TorusGeometry, c: f64) -> Self {
        let d = geometry.d();
        TrigPolynomial {
            geometry,
            terms: vec![TrigTerm {
                k: vec![0; d],
                harmonic: Harmonic::Cos,
                coeff: c,
            }],
        }
    }

    pub fn zero(geometry: TorusGeometry) -> Self {
        TrigPolynomial { geometry, terms: Vec::new() }
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let l = self.geometry.length();
        self.terms
            .iter()
            .map(|t| t.coeff * t.harmonic.value(phase(&t.k, l, point)))
            .sum()
    }

    pub fn gradient(&self, point: &[f64]) -> Vec<f64> {
        let l = self.geometry.length();
        let w = 2.0 * PI / l;
        let mut g = vec![0.0; self.geometry.d()];
        for t in &self.terms {
            let s = t.coeff * t.harmonic.slope(phase(&t.k, l, point)) * w;
            for (gi, &ki) in g.iter_mut().zip(&t.k) {
                *gi += s * ki as f64;
            }
        }
        g
    }

    /// Largest `|k_j|` over all terms and axes.
    pub fn top_harmonic(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<TrigPolynomial>,
}

impl VectorField {
    pub fn new(components: Vec<TrigPolynomial>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| invalid("vector_field", "need one component per axis"))?
            .geometry();
        check_len(first.d(), components.len())?;
        if components.iter().any(|c| c.geometry() != first) {
            return Err(Error::StructureMismatch("components live on different tori".into()));
        }
        Ok(VectorField { components })
    }

    /// The constant field `v`.
    pub fn constant(geometry: TorusGeometry, v: &[f64]) -> Result<Self> {
        check_len(geometry.d(), v.len())?;
        Self::new(v.iter().map(|&c| TrigPolynomial::constant(geometry, c)).collect())
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.components[0].geometry()
    }

    pub fn components(&self) -> &[TrigPolynomial] {
        &self.components
    }

    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    pub fn negated(&self) -> VectorField {
        let components = self
            .components
            .iter()
            .map(|c| TrigPolynomial {
                geometry: c.geometry,
                terms: c
                    .terms
                    .iter()
                    .map(|t| TrigTerm {
                        coeff: -t.coeff,
                        ..t.clone()
                    })
                    .collect(),
            })
            .collect();
        VectorField { components }
    }

    pub fn top_harmonic(&self) -> u32 {
        self.components.iter().map(|c| c.top_harmonic()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub field: VectorField,
    pub duration: f64,
    pub start: Vec<f64>,
}

impl FlowSpec {
    pub fn new(field: VectorField, duration: f64, start: Vec<f64>) -> Result<Self> {
        if !duration.is_finite() {
            return Err(invalid("flow_duration", "must be finite"));
        }
        check_len(field.geometry().d(), start.len())?;
        if start.iter().any(|x| !x.is_finite()) {
            return Err(invalid("flow_start", "must be finite"));
        }
        Ok(FlowSpec { field, duration, start })
    }

    /// Same curve traversed backwards from its endpoint.
    pub fn reversed(&self, steps: usize) -> Result<FlowSpec> {
        let end = flow_path(self, steps)?.pop().expect("path has points");
        FlowSpec::new(self.field.negated(), self.duration, end)
    }

    pub fn from_start(&self, start: Vec<f64>) -> Result<FlowSpec> {
        FlowSpec::new(self.field.clone(), self.duration, start)
    }
}

fn rk4_step(field: &VectorField, p: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], c: f64| a.iter().zip(b).map(|(x, y)| x + c * y).collect::<Vec<_>>();
    let k1 = field.eval(p);
    let k2 = field.eval(&add(p, &k1, h / 2.0));
    let k3 = field.eval(&add(p, &k2, h / 2.0));
    let k4 = field.eval(&add(p, &k3, h));
    p.iter()
        .enumerate()
        .map(|(i, x)| x + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// `steps + 1` points of the flow from its start, classical RK4, coordinates
/// not wrapped into the fundamental cell.
pub fn flow_path(flow: &FlowSpec, steps: usize) -> Result<Vec<Vec<f64>>> {
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    let h = flow.duration / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(flow.start.clone());
    for i in 0..steps {
        let next = rk4_step(&flow.field, &out[i], h);
        out.push(next);
    }
    Ok(out)
}

/// A connection one-form evaluable pointwise.
pub trait GaugeField {
    fn lie(&self) -> &LieStructure;
    fn geometry(&self) -> TorusGeometry;
    /// Component `A_axis(point)`, anti-hermitian.
    fn eval(&self, axis: usize, point: &[f64]) -> DMatrix<C64>;
    /// Harmonic bound used to size the integrator.
    fn top_harmonic(&self) -> u32;

    /// `sum_mu A_mu(point) v^mu`.
    fn contract(&self, point: &[f64], v: &[f64]) -> DMatrix<C64> {
        let r = self.lie().rep_dim();
        let mut m = DMatrix::from_element(r, r, ZERO);
        for (axis, &c) in v.iter().enumerate() {
            if c != 0.0 {
                m += self.eval(axis, point) * C64::new(c, 0.0);
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionTerm {
    pub generator: usize,
    pub axis: usize,
    pub k: Vec<i32>,
    pub harmonic: Harmonic,
    pub coeff: f64,
}

impl ConnectionTerm {
    fn key(&self) -> (usize, usize, Vec<i32>, Harmonic) {
        (self.generator, self.axis, self.k.clone(), self.harmonic)
    }
}

/// `A = sum coeff * harmonic(k . m) T_generator dx^axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    lie: LieStructure,
    geometry: TorusGeometry,
    terms: Vec<ConnectionTerm>,
}

impl Connection {
    pub fn new(lie: LieStructure, geometry: TorusGeometry, terms: Vec<ConnectionTerm>) -> Result<Self> {
        for t in &terms {
            crate::error::check_index(t.generator, lie.dim())?;
            crate::error::check_index(t.axis, geometry.d())?;
            check_len(geometry.d(), t.k.len())?;
            if !t.coeff.is_finite() {
                return Err(invalid("coeff", "connection coefficients must be finite"));
            }
        }
        Ok(Connection { lie, geometry, terms })
    }

    pub fn zero(lie: LieStructure, geometry: TorusGeometry) -> Self {
        Connection {
            lie,
            geometry,
            terms: Vec::new(),
        }
    }

    /// Constant `sum_a coeffs[a] T_a dx^axis`.
    pub fn constant(lie: LieStructure, geometry: TorusGeometry, axis: usize, coeffs: &[f64]) -> Result<Self> {
        check_len(lie.dim(), coeffs.len())?;
        let d = geometry.d();
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(a, &c)| ConnectionTerm {
                generator: a,
                axis,
                k: vec![0; d],
                harmonic: Harmonic::Cos,
                coeff: c,
            })
            .collect();
        Self::new(lie, geometry, terms)
    }

    pub fn terms(&self) -> &[ConnectionTerm] {
        &self.terms
    }

    /// Terms with identical `(generator, axis, k, harmonic)` summed, zeros dropped,
    /// in sorted order.
    pub fn merged(&self) -> Connection {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.key().cmp(&b.key()));
        let mut out: Vec<ConnectionTerm> = Vec::new();
        for t in terms {
            match out.last_mut() {
                Some(last) if last.key() == t.key() => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff != 0.0);
        Connection {
            lie: self.lie.clone(),
            geometry: self.geometry,
            terms: out,
        }
    }

    /// Text form: `group`, `dimension`, `length` header lines followed by
    /// `generator axis k1,..,kd cos|sin coeff` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut group = None;
        let mut dim = None;
        let mut length = None;
        let mut raw = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::StructureMismatch(format!("line {}: {what}", no + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "group" if fields.len() == 2 => {
                    group = Some(match fields[1].to_ascii_lowercase().as_str() {
                        "u1" => GaugeGroup::U1,
                        "su2" => GaugeGroup::SU2,
                        _ => return Err(bad("group must be u1 or su2")),
                    })
                }
                "dimension" if fields.len() == 2 => {
                    dim = Some(fields[1].parse::<usize>().map_err(|_| bad("dimension is not an integer"))?)
                }
                "length" if fields.len() == 2 => {
                    length = Some(fields[1].parse::<f64>().map_err(|_| bad("length is not a number"))?)
                }
                _ if fields.len() == 5 => {
                    let generator = fields[0].parse().map_err(|_| bad("generator is not an index"))?;
                    let axis = fields[1].parse().map_err(|_| bad("axis is not an index"))?;
                    let k = fields[2]
                        .split(',')
                        .map(|x| x.trim().parse::<i32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("harmonic must be comma separated integers"))?;
                    let harmonic = fields[3].parse().map_err(|_| bad("expected cos or sin"))?;
                    let coeff = fields[4].parse().map_err(|_| bad("coefficient is not a number"))?;
                    raw.push((no + 1, ConnectionTerm {
                        generator,
                        axis,
                        k,
                        harmonic,
                        coeff,
                    }));
                }
                _ => return Err(bad("expected a header or a 5-field term")),
            }
        }
        let lie = LieStructure::new(group.ok_or_else(|| Error::StructureMismatch("missing `group` line".into()))?);
        let geometry = TorusGeometry::new(
            dim.ok_or_else(|| Error::StructureMismatch("missing `dimension` line".into()))?,
            length.unwrap_or(2.0 * PI),
        )?;
        for (line, t) in &raw {
            if t.k.len() != geometry.d() || t.axis >= geometry.d() || t.generator >= lie.dim() {
                return Err(Error::StructureMismatch(format!("line {line}: term does not fit the header")));
            }
        }
        Self::new(lie, geometry, raw.into_iter().map(|(_, t)| t).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = match self.lie.group() {
            GaugeGroup::U1 => "u1",
            GaugeGroup::SU2 => "su2",
        };
        let _ = writeln!(s, "group {g}");
        let _ = writeln!(s, "dimension {}", self.geometry.d());
        let _ = writeln!(s, "length {}", sig17(self.geometry.length()));
        for t in &self.terms {
            let k: Vec<String> = t.k.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                t.generator,
                t.axis,
                k.join(","),
                t.harmonic.label(),
                sig17(t.coeff)
            );
        }
        s
    }
}

impl GaugeField for Connection {
    fn lie(&self) -> &LieStructure {
        &self.lie
    }

    fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    fn eval(&self, axis: usize, point: &[f64]) -> DMatrix<C64> {
        let r = self.lie.rep_dim();
        let mut m = DMatrix::from_element(r, r, ZERO);
        let l = self.geometry.length();
        for t in self.terms.iter().filter(|t| t.axis == axis) {
            let c = t.coeff * t.harmonic.value(phase(&t.k, l, point));
            m += &self.lie.generators()[t.generator] * C64::new(c, 0.0);
        }
        m
    }

    fn top_harmonic(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

/// The gauge transform of `base` by `g(m) = exp(alpha(m) X)`.
#[derive(Clone, Debug)]
pub struct GaugeTransformed<'a, F: GaugeField> {
    base: &'a F,
    alpha: TrigPolynomial,
    generator: DMatrix<C64>,
}

impl<'a, F: GaugeField> GaugeTransformed<'a, F> {
    pub fn new(base: &'a F, alpha: TrigPolynomial, generator: DMatrix<C64>) -> Result<Self> {
        let r = base.lie().rep_dim();
        if generator.nrows() != r || generator.ncols() != r {
            return Err(Error::DimensionMismatch {
                left: generator.nrows(),
                right: r,
            });
        }
        if alpha.geometry() != base.geometry() {
            return Err(Error::StructureMismatch("gauge function lives on another torus".into()));
        }
        if crate::lie::max_abs(&(&generator + generator.adjoint())) > 1e-12 {
            return Err(invalid("generator", "must be anti-hermitian"));
        }
        Ok(GaugeTransformed { base, alpha, generator })
    }

    pub fn gauge_element(&self, point: &[f64]) -> DMatrix<C64> {
        expm_anti_hermitian(&(&self.generator * C64::new(self.alpha.eval(point), 0.0)))
    }
}

impl<F: GaugeField> GaugeField for GaugeTransformed<'_, F> {
    fn lie(&self) -> &LieStructure {
        self.base.lie()
    }

    fn geometry(&self) -> TorusGeometry {
        self.base.geometry()
    }

    fn eval(&self, axis: usize, point: &[f64]) -> DMatrix<C64> {
        let g = self.gauge_element(point);
        let da = self.alpha.gradient(point)[axis];
        &g * self.base.eval(axis, point) * g.adjoint() + &self.generator * C64::new(da, 0.0)
    }

    fn top_harmonic(&self) -> u32 {
        self.base.top_harmonic() + self.alpha.top_harmonic()
    }
}

/// Fewest steps accepted for a field/flow pair.
pub fn minimum_steps(field: &dyn GaugeField, flow: &FlowSpec) -> usize {
    8 * (field.top_harmonic().max(flow.field.top_harmonic()).max(1) as usize)
}

/// Path-ordered exponential along the flow: fourth-order Magnus steps at the
/// Gauss-Legendre nodes, each propagator re-projected onto the unitary group.
pub fn holonomy_along_flow(field: &dyn GaugeField, flow: &FlowSpec, steps: usize) -> Result<DMatrix<C64>> {
    if flow.field.geometry() != field.geometry() {
        return Err(Error::StructureMismatch("flow and connection live on different tori".into()));
    }
    let min = minimum_steps(field, flow);
    if steps < min {
        return Err(invalid("steps", format!("{steps} below the minimum {min} for this connection")));
    }
    let r = field.lie().rep_dim();
    let h = flow.duration / steps as f64;
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    let c2 = 0.5 + 3f64.sqrt() / 6.0;
    let mut hol = DMatrix::<C64>::identity(r, r);
    let mut p = flow.start.clone();
    let at = |q: &[f64]| field.contract(q, &flow.field.eval(q));
    for _ in 0..steps {
        let p1 = rk4_step(&flow.field, &p, c1 * h);
        let p2 = rk4_step(&flow.field, &p, c2 * h);
        let a1 = at(&p1);
        let a2 = at(&p2);
        let omega = (&a1 + &a2) * C64::new(h / 2.0, 0.0) + bracket(&a2, &a1) * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
        hol = polar_unitary(&(expm_anti_hermitian(&omega) * hol))?;
        p = rk4_step(&flow.field, &p, h);
    }
    Ok(hol)
}

/// Largest tolerated gap between the start and end of a closed flow.
pub const LOOP_CLOSURE_TOL: f64 = 1e-8;

/// `tr(Hol) / rep_dim` around a closed flow.
pub fn wilson_loop(field: &dyn GaugeField, flow: &FlowSpec, steps: usize) -> Result<C64> {
    let end = flow_path(flow, steps)?.pop().expect("path has points");
    let gap = flow.field.geometry().periodic_gap(&flow.start, &end);
    if gap > LOOP_CLOSURE_TOL {
        return Err(Error::OpenLoop { gap });
    }
    let hol = holonomy_along_flow(field, flow, steps)?;
    Ok(hol.trace() / hol.nrows() as f64)
}

/// `conn - t * omega`, with matching terms merged.
pub fn translate_connection(conn: &Connection, omega: &Connection, t: f64) -> Result<Connection> {
    if conn.lie.group() != omega.lie.group() || conn.geometry != omega.geometry {
        return Err(Error::StructureMismatch("connections differ in group or torus".into()));
    }
    if t == 0.0 {
        return Ok(conn.clone());
    }
    let mut terms = conn.terms.clone();
    terms.extend(omega.terms.iter().map(|o| ConnectionTerm {
        coeff: -t * o.coeff,
        ..o.clone()
    }));
    Ok(Connection {
        lie: conn.lie.clone(),
        geometry: conn.geometry,
        terms,
    }
    .merged())
}

/// Samples of a `C^r`-valued function on a uniform periodic grid, axis 0
/// fastest, with the `r` components contiguous per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpinor {
    geometry: TorusGeometry,
    points: usize,
    rep_dim: usize,
    values: Vec<C64>,
}

impl GridSpinor {
    pub fn new(geometry: TorusGeometry, points: usize, rep_dim: usize, values: Vec<C64>) -> Result<Self> {
        if points < 4 {
            return Err(Error::GridTooCoarse { grid: points, required: 4 });
        }
        check_len(points.pow(geometry.d() as u32) * rep_dim, values.len())?;
        Ok(GridSpinor {
            geometry,
            points,
            rep_dim,
            values,
        })
    }

    pub fn from_fn(geometry: TorusGeometry, points: usize, rep_dim: usize, f: impl Fn(&[f64]) -> Vec<C64>) -> Result<Self> {
        let mut values = Vec::new();
        for flat in 0..points.pow(geometry.d() as u32) {
            let p = grid_point(geometry, points, flat);
            let v = f(&p);
            check_len(rep_dim, v.len())?;
            values.extend(v);
        }
        Self::new(geometry, points, rep_dim, values)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn rep_dim(&self) -> usize {
        self.rep_dim
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &GridSpinor) -> Result<f64> {
        check_len(self.values.len(), other.values.len())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Periodic tensor-product cubic Lagrange interpolation.
    pub fn interpolate(&self, point: &[f64]) -> Vec<C64> {
        let d = self.geometry.d();
        let n = self.points;
        let h = self.geometry.length() / n as f64;
        let mut base = vec![0i64; d];
        let mut weights = vec![[0.0; 4]; d];
        for axis in 0..d {
            let u = point[axis] / h;
            let i0 = u.floor();
            let t = u - i0;
            base[axis] = i0 as i64 - 1;
            // nodes at -1, 0, 1, 2 relative to floor
            weights[axis] = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
        }
        let mut out = vec![ZERO; self.rep_dim];
        for corner in 0..4usize.pow(d as u32) {
            let mut rem = corner;
            let mut flat = 0usize;
            let mut stride = 1usize;
            let mut w = 1.0;
            for axis in 0..d {
                let o = rem % 4;
                rem /= 4;
                let idx = (base[axis] + o as i64).rem_euclid(n as i64) as usize;
                flat += idx * stride;
                stride *= n;
                w *= weights[axis][o];
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.values[flat * self.rep_dim + c] * w;
            }
        }
        out
    }
}

fn grid_point(geometry: TorusGeometry, points: usize, flat: usize) -> Vec<f64> {
    let h = geometry.length() / points as f64;
    let mut rem = flat;
    (0..geometry.d())
        .map(|_| {
            let i = rem % points;
            rem /= points;
            i as f64 * h
        })
        .collect()
}

fn jacobian_det(m: &DMatrix<f64>) -> f64 {
    m.determinant()
}

/// `(f e^X psi)(m') = f(m) Hol(gamma_m) psi(m)` where `m' = exp_t(X)(m)`,
/// evaluated on the grid of `spinor`. With `jacobian`, values are also scaled
/// by `|det dm/dm'|^{1/2}`, which makes the map unitary.
pub fn apply_hd_element(
    f: &dyn Fn(&[f64]) -> f64,
    field: &dyn GaugeField,
    flow: &FlowSpec,
    spinor: &GridSpinor,
    steps: usize,
    jacobian: bool,
) -> Result<GridSpinor> {
    let g = field.geometry();
    if spinor.geometry != g || flow.field.geometry() != g {
        return Err(Error::StructureMismatch("spinor, flow and connection must share a torus".into()));
    }
    if spinor.rep_dim != field.lie().rep_dim() {
        return Err(Error::DimensionMismatch {
            left: spinor.rep_dim,
            right: field.lie().rep_dim(),
        });
    }
    let back = VectorField::new(flow.field.negated().components)?;
    let d = g.d();
    let mut values = Vec::with_capacity(spinor.values.len());
    for flat in 0..spinor.points.pow(d as u32) {
        let target = grid_point(g, spinor.points, flat);
        let back_flow = FlowSpec::new(back.clone(), flow.duration, target.clone())?;
        let source = flow_path(&back_flow, steps)?.pop().expect("path has points");
        let forward = flow.from_start(source.clone())?;
        let hol = holonomy_along_flow(field, &forward, steps)?;
        let psi = spinor.interpolate(&source);
        let mut scale = f(&g.wrap(&source));
        if jacobian {
            let eps = 1e-5 * g.length();
            let mut jm = DMatrix::zeros(d, d);
            for j in 0..d {
                let mut plus = target.clone();
                let mut minus = target.clone();
                plus[j] += eps;
                minus[j] -= eps;
                let sp = flow_path(&back_flow.from_start(plus)?, steps)?.pop().expect("path has points");
                let sm = flow_path(&back_flow.from_start(minus)?, steps)?.pop().expect("path has points");
                for i in 0..d {
                    jm[(i, j)] = (sp[i] - sm[i]) / (2.0 * eps);
                }
            }
            scale *= jacobian_det(&jm).abs().sqrt();
        }
        let v = nalgebra::DVector::from_vec(psi);
        let out = hol * v * C64::new(scale, 0.0);
        values.extend(out.iter().copied());
    }
    GridSpinor::new(g, spinor.points, spinor.rep_dim, values)
}
