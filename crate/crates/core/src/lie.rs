//! Compact gauge Lie algebras in their defining representations, plus the
//! small dense matrix helpers transport needs.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::operator::{C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeGroup {
    U1,
    SU2,
}

/// Anti-hermitian generator basis with its structure constants
/// `[T_a, T_b] = f_abc T_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieStructure {
    group: GaugeGroup,
    generators: Vec<DMatrix<C64>>,
    structure: Vec<f64>,
    trace_norm: f64,
}

impl LieStructure {
    pub fn new(group: GaugeGroup) -> Self {
        let c = C64::new;
        let generators = match group {
            GaugeGroup::U1 => vec![DMatrix::from_element(1, 1, c(0.0, 1.0))],
            // T_a = -(i/2) sigma_a
            GaugeGroup::SU2 => vec![
                DMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -0.5), c(0.0, -0.5), ZERO]),
                DMatrix::from_row_slice(2, 2, &[ZERO, c(-0.5, 0.0), c(0.5, 0.0), ZERO]),
                DMatrix::from_row_slice(2, 2, &[c(0.0, -0.5), ZERO, ZERO, c(0.0, 0.5)]),
            ],
        };
        let trace_norm = -(&generators[0] * &generators[0]).trace().re;
        let mut out = LieStructure {
            group,
            generators,
            structure: Vec::new(),
            trace_norm,
        };
        let n = out.dim();
        let mut f = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let br = bracket(&out.generators[a], &out.generators[b]);
                for (cc, v) in out.components(&br).into_iter().enumerate() {
                    f[(a * n + b) * n + cc] = v;
                }
            }
        }
        out.structure = f;
        out
    }

    pub fn u1() -> Self {
        Self::new(GaugeGroup::U1)
    }

    pub fn su2() -> Self {
        Self::new(GaugeGroup::SU2)
    }

    pub fn group(&self) -> GaugeGroup {
        self.group
    }

    /// Number of generators.
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Dimension of the defining representation.
    pub fn rep_dim(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn generators(&self) -> &[DMatrix<C64>] {
        &self.generators
    }

    pub fn generator(&self, a: usize) -> Result<&DMatrix<C64>> {
        crate::error::check_index(a, self.dim())?;
        Ok(&self.generators[a])
    }

    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dim();
        self.structure[(a * n + b) * n + c]
    }

    /// Real coordinates of an algebra element in the generator basis,
    /// using the trace form `-tr(T_a T_b) = trace_norm * delta_ab`.
    pub fn components(&self, x: &DMatrix<C64>) -> Vec<f64> {
        self.generators
            .iter()
            .map(|t| -(t * x).trace().re / self.trace_norm)
            .collect()
    }

    pub fn element(&self, coeffs: &[f64]) -> Result<DMatrix<C64>> {
        crate::error::check_len(self.dim(), coeffs.len())?;
        let r = self.rep_dim();
        let mut m = DMatrix::from_element(r, r, ZERO);
        for (t, &x) in self.generators.iter().zip(coeffs) {
            m += t * C64::new(x, 0.0);
        }
        Ok(m)
    }

    /// Sum of squared components, `-tr(X^2) / trace_norm`.
    pub fn component_norm_sq(&self, x: &DMatrix<C64>) -> f64 {
        -(x * x).trace().re / self.trace_norm
    }

    /// Max deviation of the generators from anti-hermiticity and of their
    /// brackets from the span reconstructed via the structure constants.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &self.generators {
            worst = worst.max(max_abs(&(t + t.adjoint())));
        }
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let br = bracket(&self.generators[a], &self.generators[b]);
                let mut rec = DMatrix::from_element(self.rep_dim(), self.rep_dim(), ZERO);
                for c in 0..self.dim() {
                    rec += &self.generators[c] * C64::new(self.structure_constant(a, b, c), 0.0);
                }
                worst = worst.max(max_abs(&(br - rec)));
            }
        }
        worst
    }
}

pub fn bracket(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `exp(X)` for anti-hermitian `X` via the eigendecomposition of `iX`.
pub fn expm_anti_hermitian(x: &DMatrix<C64>) -> DMatrix<C64> {
    let n = x.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, x[(0, 0)].exp());
    }
    let mut h = x * C64::new(0.0, 1.0);
    h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l).exp()));
    v * phases * v.adjoint()
}

/// Nearest unitary in Frobenius norm (polar factor).
pub fn polar_unitary(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => Ok(u * vt),
        _ => Err(invalid("matrix", "singular value decomposition failed")),
    }
}

pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}
