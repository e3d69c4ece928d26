//! Exterior algebra of `R^n` as a fermionic Fock space.
//!
//! Basis states are occupation bit-sets, mode `i` on bit `i`. Creation on
//! mode `i` carries the sign `(-1)^(occupied modes below i)`.

use crate::error::{check_index, check_len, Error, Result};
use crate::operator::{OperatorMatrix, Symmetry, C64};

/// Largest supported fermionic mode count.
pub const MAX_FERMION_MODES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FermionSpace {
    n: usize,
}

impl FermionSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_FERMION_MODES {
            return Err(Error::Capacity {
                what: "fermion modes",
                requested: n as u128,
                cap: MAX_FERMION_MODES as u128,
            });
        }
        Ok(FermionSpace { n })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn encode(&self, occupied: &[usize]) -> Result<usize> {
        let mut idx = 0usize;
        for &i in occupied {
            check_index(i, self.n)?;
            idx |= 1 << i;
        }
        Ok(idx)
    }

    pub fn decode(&self, index: usize) -> Result<Vec<usize>> {
        check_index(index, self.dim())?;
        Ok((0..self.n).filter(|&i| index >> i & 1 == 1).collect())
    }

    /// `(ext_i, int_i)`: creation and annihilation on mode `i`.
    pub fn ext_int(&self, i: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
        check_index(i, self.n)?;
        let ext = OperatorMatrix::from_triplets(self.dim(), creation_entries(i, self.dim()))?;
        let int = ext.adjoint();
        Ok((ext, int))
    }

    /// `(c_i, cbar_i) = (ext + int, ext - int)`.
    pub fn clifford(&self, i: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
        let (ext, int) = self.ext_int(i)?;
        let c = (&ext + &int).with_symmetry(Symmetry::Hermitian);
        let cbar = (&ext - &int).with_symmetry(Symmetry::AntiHermitian);
        Ok((c, cbar))
    }

    /// `sum_i w_i a_i^dag a_i`, diagonal in the occupation basis.
    pub fn number_operator(&self, weights: &[f64]) -> Result<OperatorMatrix> {
        check_len(self.n, weights.len())?;
        let diag: Vec<f64> = (0..self.dim())
            .map(|idx| (0..self.n).filter(|&i| idx >> i & 1 == 1).map(|i| weights[i]).sum())
            .collect();
        Ok(OperatorMatrix::from_real_diagonal(&diag))
    }

    /// `(-1)^(fermion number)`.
    pub fn parity(&self) -> OperatorMatrix {
        let diag: Vec<f64> = (0..self.dim())
            .map(|idx| if idx.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        OperatorMatrix::from_real_diagonal(&diag)
    }

    /// Max violation of `{a_i, a_j^dag} = delta_ij` and `{a_i, a_j} = 0`.
    pub fn check_car(&self) -> Result<f64> {
        let pairs: Vec<(OperatorMatrix, OperatorMatrix)> =
            (0..self.n).map(|i| self.ext_int(i)).collect::<Result<_>>()?;
        car_violation(&pairs)
    }

    /// Max violation over the Clifford relations: `c^2 = 1`, `cbar^2 = -1`,
    /// `{c_i, cbar_j} = 0`, and `{c_i, c_j} = {cbar_i, cbar_j} = 0` off the
    /// diagonal.
    pub fn check_clifford(&self) -> Result<f64> {
        let pairs: Vec<(OperatorMatrix, OperatorMatrix)> =
            (0..self.n).map(|i| self.clifford(i)).collect::<Result<_>>()?;
        let id = OperatorMatrix::identity(self.dim());
        let mut worst: f64 = 0.0;
        for (i, (ci, bi)) in pairs.iter().enumerate() {
            worst = worst.max((ci * ci).max_abs_diff(&id)?);
            worst = worst.max((bi * bi).max_abs_diff(&id.scale_real(-1.0))?);
            for (j, (cj, bj)) in pairs.iter().enumerate() {
                worst = worst.max(ci.anticommutator(bj)?.max_abs());
                if i != j {
                    worst = worst.max(ci.anticommutator(cj)?.max_abs());
                    worst = worst.max(bi.anticommutator(bj)?.max_abs());
                }
            }
        }
        Ok(worst)
    }
}

pub(crate) fn creation_entries(i: usize, dim: usize) -> Vec<(usize, usize, C64)> {
    (0..dim)
        .filter(|&s| s >> i & 1 == 0)
        .map(|s| {
            let below = (s & ((1usize << i) - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            (s | 1 << i, s, C64::new(sign, 0.0))
        })
        .collect()
}

/// Max CAR violation for a family of `(creation, annihilation)` pairs.
pub fn car_violation(pairs: &[(OperatorMatrix, OperatorMatrix)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, (_, ai)) in pairs.iter().enumerate() {
        let id = OperatorMatrix::identity(ai.dim());
        for (j, (cj, aj)) in pairs.iter().enumerate() {
            let mixed = ai.anticommutator(cj)?;
            let err = if i == j { mixed.max_abs_diff(&id)? } else { mixed.max_abs() };
            worst = worst.max(err);
            worst = worst.max(ai.anticommutator(aj)?.max_abs());
        }
    }
    Ok(worst)
}
