//! Compressed-sparse-row complex square matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Declared adjoint symmetry of an [`OperatorMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    AntiHermitian,
    None,
}

impl Symmetry {
    fn after_scale(self, c: C64) -> Symmetry {
        if c.im == 0.0 {
            self
        } else if c.re == 0.0 {
            match self {
                Symmetry::Hermitian => Symmetry::AntiHermitian,
                Symmetry::AntiHermitian => Symmetry::Hermitian,
                Symmetry::None => Symmetry::None,
            }
        } else {
            Symmetry::None
        }
    }

    fn combine(self, other: Symmetry) -> Symmetry {
        if self == other {
            self
        } else {
            Symmetry::None
        }
    }
}

/// Sparse complex square matrix in CSR layout with a symmetry tag.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    symmetry: Symmetry,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            symmetry: Symmetry::Hermitian,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut out = Self::from_diagonal(&diag.iter().map(|&d| C64::new(d, 0.0)).collect::<Vec<_>>());
        out.symmetry = Symmetry::Hermitian;
        out
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let dim = diag.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != ZERO {
                cols.push(i);
                vals.push(d);
            }
            row_ptr.push(cols.len());
        }
        let symmetry = if diag.iter().all(|d| d.im == 0.0) {
            Symmetry::Hermitian
        } else {
            Symmetry::None
        };
        OperatorMatrix {
            dim,
            row_ptr,
            cols,
            vals,
            symmetry,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= dim {
                return Err(Error::IndexOutOfRange { index: r, len: dim });
            }
            if c >= dim {
                return Err(Error::IndexOutOfRange { index: c, len: dim });
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(OperatorMatrix {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
            symmetry: Symmetry::None,
        })
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Tags the matrix without checking; use [`Self::declare`] to verify.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    /// Tags the matrix after checking the declared symmetry in max-entry norm.
    pub fn declare(self, symmetry: Symmetry, tol: f64) -> Result<Self> {
        let defect = match symmetry {
            Symmetry::Hermitian => self.hermiticity_defect(),
            Symmetry::AntiHermitian => self.anti_hermiticity_defect(),
            Symmetry::None => 0.0,
        };
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(self.with_symmetry(symmetry))
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(p) => self.vals[a + p],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut y = vec![ZERO; self.dim];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        let mut out = Self::from_triplets(self.dim, t).expect("indices in range");
        out.symmetry = self.symmetry;
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        if c == ZERO {
            return Self::zeros(self.dim);
        }
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out.symmetry = self.symmetry.after_scale(c);
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: C64, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        row_ptr.push(0);
        for i in 0..self.dim {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.cols[p] } else { usize::MAX };
                let cq = if q < qe { other.cols[q] } else { usize::MAX };
                let (col, v) = if cp < cq {
                    p += 1;
                    (cp, self.vals[p - 1])
                } else if cq < cp {
                    q += 1;
                    (cq, c * other.vals[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (cp, self.vals[p - 1] + c * other.vals[q - 1])
                };
                if v != ZERO {
                    cols.push(col);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(OperatorMatrix {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            symmetry: self.symmetry.combine(other.symmetry.after_scale(c)),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.axpy(ONE, other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-ONE, other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc = vec![ZERO; self.dim];
        let mut mark = vec![usize::MAX; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..self.dim {
            touched.clear();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (k, a) = (self.cols[p], self.vals[p]);
                for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                    let j = other.cols[q];
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = ZERO;
                        touched.push(j);
                    }
                    acc[j] += a * other.vals[q];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != ZERO {
                    cols.push(j);
                    vals.push(acc[j]);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(OperatorMatrix {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            symmetry: Symmetry::None,
        })
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let out = self.try_mul(other)?.try_sub(&other.try_mul(self)?)?;
        let sym = match (self.symmetry, other.symmetry) {
            (Symmetry::Hermitian, Symmetry::Hermitian)
            | (Symmetry::AntiHermitian, Symmetry::AntiHermitian) => Symmetry::AntiHermitian,
            (Symmetry::Hermitian, Symmetry::AntiHermitian)
            | (Symmetry::AntiHermitian, Symmetry::Hermitian) => Symmetry::Hermitian,
            _ => Symmetry::None,
        };
        Ok(out.with_symmetry(sym))
    }

    /// `{self, other} = self*other + other*self`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        let out = self.try_mul(other)?.try_add(&other.try_mul(self)?)?;
        let sym = match (self.symmetry, other.symmetry) {
            (Symmetry::Hermitian, Symmetry::Hermitian)
            | (Symmetry::AntiHermitian, Symmetry::AntiHermitian) => Symmetry::Hermitian,
            (Symmetry::Hermitian, Symmetry::AntiHermitian)
            | (Symmetry::AntiHermitian, Symmetry::Hermitian) => Symmetry::AntiHermitian,
            _ => Symmetry::None,
        };
        Ok(out.with_symmetry(sym))
    }

    /// Kronecker product; the index of `b` runs fastest.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let dim = a.dim * b.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(a.nnz() * b.nnz());
        let mut vals = Vec::with_capacity(a.nnz() * b.nnz());
        row_ptr.push(0);
        for ia in 0..a.dim {
            for ib in 0..b.dim {
                for (ja, va) in a.row(ia) {
                    for (jb, vb) in b.row(ib) {
                        let v = va * vb;
                        if v != ZERO {
                            cols.push(ja * b.dim + jb);
                            vals.push(v);
                        }
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        let symmetry = match (a.symmetry, b.symmetry) {
            (Symmetry::Hermitian, Symmetry::Hermitian) => Symmetry::Hermitian,
            (Symmetry::AntiHermitian, Symmetry::Hermitian)
            | (Symmetry::Hermitian, Symmetry::AntiHermitian) => Symmetry::AntiHermitian,
            (Symmetry::AntiHermitian, Symmetry::AntiHermitian) => Symmetry::Hermitian,
            _ => Symmetry::None,
        };
        OperatorMatrix {
            dim,
            row_ptr,
            cols,
            vals,
            symmetry,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.try_sub(other)?.max_abs())
    }

    /// Largest entry modulus of `self - other` restricted to columns where
    /// `mask` is set.
    pub fn max_abs_diff_on_columns(&self, other: &Self, mask: &[bool]) -> Result<f64> {
        crate::error::check_len(self.dim, mask.len())?;
        let d = self.try_sub(other)?;
        Ok(d.triplets()
            .filter(|&(_, j, _)| mask[j])
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max))
    }

    /// Largest entry modulus of `self - other` restricted to rows and columns
    /// where `mask` is set (the compressed difference).
    pub fn max_abs_diff_on_block(&self, other: &Self, mask: &[bool]) -> Result<f64> {
        crate::error::check_len(self.dim, mask.len())?;
        let d = self.try_sub(other)?;
        Ok(d.triplets()
            .filter(|&(i, j, _)| mask[i] && mask[j])
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v + self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the indices where `keep` is set, plus the map
    /// from new to old indices.
    pub fn compress(&self, keep: &[bool]) -> Result<(Self, Vec<usize>)> {
        crate::error::check_len(self.dim, keep.len())?;
        let old: Vec<usize> = (0..self.dim).filter(|&i| keep[i]).collect();
        let mut new_of = vec![usize::MAX; self.dim];
        for (n, &o) in old.iter().enumerate() {
            new_of[o] = n;
        }
        let t = old
            .iter()
            .enumerate()
            .flat_map(|(n, &o)| {
                let new_of = &new_of;
                self.row(o)
                    .filter(move |&(j, _)| new_of[j] != usize::MAX)
                    .map(move |(j, v)| (n, new_of[j], v))
            })
            .collect();
        let out = Self::from_triplets(old.len(), t)?.with_symmetry(self.symmetry);
        Ok((out, old))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Coordinate-list dump, one `row col re im` line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.triplets() {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                i,
                j,
                crate::numfmt::sig17(v.re),
                crate::numfmt::sig17(v.im)
            );
        }
        s
    }

    /// Connected components of the sparsity graph (ignoring edge direction),
    /// each sorted ascending; components ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.triplets() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.dim {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Dense principal submatrix on `indices` (ascending).
    pub fn dense_block(&self, indices: &[usize]) -> DMatrix<C64> {
        let mut local = BTreeMap::new();
        for (n, &o) in indices.iter().enumerate() {
            local.insert(o, n);
        }
        let mut m = DMatrix::from_element(indices.len(), indices.len(), ZERO);
        for (n, &o) in indices.iter().enumerate() {
            for (j, v) in self.row(o) {
                if let Some(&c) = local.get(&j) {
                    m[(n, c)] = v;
                }
            }
        }
        m
    }

    /// Local CSR block on `indices`, for iterative solvers.
    pub(crate) fn sub_block(&self, indices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim];
        for (n, &o) in indices.iter().enumerate() {
            local[o] = n;
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &o in indices {
            let mut row: Vec<(usize, C64)> = self
                .row(o)
                .filter(|&(j, _)| local[j] != usize::MAX)
                .map(|(j, v)| (local[j], v))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        OperatorMatrix {
            dim: indices.len(),
            row_ptr,
            cols,
            vals,
            symmetry: self.symmetry,
        }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_add(rhs).expect("dimension mismatch in operator sum")
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_sub(rhs).expect("dimension mismatch in operator difference")
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_mul(rhs).expect("dimension mismatch in operator product")
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

/// Dot product `<a|b>` with the bra conjugated.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
