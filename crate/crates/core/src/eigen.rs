//! Lowest eigenpairs of sparse hermitian matrices.
//!
//! The sparsity graph is split into connected components. Small components
//! are diagonalized densely; large ones go through Lanczos with full
//! reorthogonalization, explicit locking of converged pairs and seeded
//! restarts.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::operator::{inner, norm, OperatorMatrix, C64, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Components up to this size are diagonalized densely.
    pub dense_limit: usize,
    pub seed: u64,
    /// Residual tolerance relative to the row-sum norm estimate.
    pub tol: f64,
    /// Maximum Lanczos restarts per component.
    pub max_restarts: usize,
    /// Upper bound on the Krylov dimension of a single run.
    pub max_krylov: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_limit: 4096,
            seed: 0x5eed,
            tol: 1e-9,
            max_restarts: 500,
            max_krylov: 400,
        }
    }
}

/// Eigenvector stored on the support of its component.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl SparseVector {
    pub fn to_dense(&self, dim: usize) -> Vec<C64> {
        let mut v = vec![ZERO; dim];
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            v[i] = x;
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// `||A v - value v||`.
    pub residual: f64,
    pub vector: SparseVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub pairs: Vec<Eigenpair>,
    /// Max absolute row sum of the input, the scale for residuals.
    pub norm_estimate: f64,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.residual).collect()
    }

    /// Lowest eigenvalue exceeding the ground value by more than `tol`.
    pub fn gap(&self, tol: f64) -> Option<f64> {
        let e0 = self.pairs.first()?.value;
        self.pairs.iter().map(|p| p.value).find(|&v| v - e0 > tol).map(|v| v - e0)
    }
}

pub fn spectrum(op: &OperatorMatrix, count: usize) -> Result<Spectrum> {
    spectrum_with(op, count, &SolverOptions::default())
}

pub fn spectrum_with(op: &OperatorMatrix, count: usize, opts: &SolverOptions) -> Result<Spectrum> {
    let scale = op.max_abs().max(1.0);
    let defect = op.hermiticity_defect();
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian { defect });
    }
    if count > op.dim() {
        return Err(invalid("count", format!("{count} exceeds dimension {}", op.dim())));
    }
    let norm_estimate = op.max_row_sum();
    let mut pairs = Vec::new();
    for comp in op.components() {
        let want = count.min(comp.len());
        if want == 0 {
            continue;
        }
        let found = if comp.len() <= opts.dense_limit {
            dense_component(op, &comp)
        } else {
            lanczos_component(op, &comp, want, norm_estimate, opts)?
        };
        pairs.extend(found.into_iter().take(want));
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    pairs.truncate(count);
    let limit = opts.tol * norm_estimate.max(f64::MIN_POSITIVE);
    if let Some(worst) = pairs.iter().map(|p| p.residual).reduce(f64::max) {
        if worst > limit.max(1e-12 * norm_estimate) && worst > 1e-300 {
            return Err(Error::NoConvergence {
                iterations: opts.max_restarts,
                residual: worst,
            });
        }
    }
    Ok(Spectrum { pairs, norm_estimate })
}

/// Lowest `count` pairs accepted by `keep`, widening the search until enough
/// are found or the whole spectrum has been scanned.
pub fn spectrum_filtered(
    op: &OperatorMatrix,
    count: usize,
    opts: &SolverOptions,
    keep: impl Fn(&Eigenpair) -> bool,
) -> Result<Spectrum> {
    let mut want = count.max(1).min(op.dim());
    loop {
        let sp = spectrum_with(op, want, opts)?;
        let kept: Vec<Eigenpair> = sp.pairs.iter().filter(|p| keep(p)).cloned().collect();
        if kept.len() >= count || want == op.dim() {
            return Ok(Spectrum {
                pairs: kept.into_iter().take(count).collect(),
                norm_estimate: sp.norm_estimate,
            });
        }
        want = (want * 2).min(op.dim());
    }
}

fn residual_of(block: &OperatorMatrix, v: &[C64], value: f64) -> f64 {
    let mut w = vec![ZERO; v.len()];
    block.apply_into(v, &mut w);
    w.iter().zip(v).map(|(a, b)| (a - b * value).norm_sqr()).sum::<f64>().sqrt()
}

fn dense_component(op: &OperatorMatrix, comp: &[usize]) -> Vec<Eigenpair> {
    let block = op.sub_block(comp);
    let mut raw: Vec<(f64, Vec<C64>)> = if block.is_real() {
        let m = DMatrix::from_fn(comp.len(), comp.len(), |i, j| block.get(i, j).re);
        let m = (&m + m.transpose()) * 0.5;
        let eig = m.symmetric_eigen();
        (0..comp.len())
            .map(|k| {
                let v = eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect();
                (eig.eigenvalues[k], v)
            })
            .collect()
    } else {
        let m = block.to_dense();
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = m.symmetric_eigen();
        (0..comp.len())
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    };
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    raw.into_iter()
        .map(|(value, v)| Eigenpair {
            value,
            residual: residual_of(&block, &v, value),
            vector: SparseVector {
                indices: comp.to_vec(),
                values: v,
            },
        })
        .collect()
}

fn orthogonalize(v: &mut [C64], against: &[Vec<C64>]) {
    for _ in 0..2 {
        for u in against {
            let c = inner(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, against: &[Vec<C64>]) -> Option<Vec<C64>> {
    for _ in 0..8 {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        orthogonalize(&mut v, against);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

struct RitzRun {
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
    estimates: Vec<f64>,
}

/// One Lanczos run of at most `steps` vectors, orthogonal to `locked`.
fn lanczos_run(
    n: usize,
    matvec: &dyn Fn(&[C64], &mut [C64]),
    start: Vec<C64>,
    locked: &[Vec<C64>],
    steps: usize,
) -> RitzRun {
    let mut basis: Vec<Vec<C64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; n];
    let last_beta = loop {
        let v = basis.last().unwrap();
        matvec(v, &mut w);
        let a = inner(v, &w).re;
        alpha.push(a);
        let mut r = w.clone();
        orthogonalize(&mut r, locked);
        orthogonalize(&mut r, &basis);
        let b = norm(&r);
        if basis.len() >= steps || b <= 1e-13 * (1.0 + a.abs()) {
            break b;
        }
        beta.push(b);
        r.iter_mut().for_each(|x| *x /= b);
        basis.push(r);
    };
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let exhausted = last_beta <= 1e-13;
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut estimates = Vec::with_capacity(m);
    for k in order {
        let y: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let mut x = vec![ZERO; n];
        for (j, b) in basis.iter().enumerate() {
            let c = y[j];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += bi * c;
            }
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        values.push(eig.eigenvalues[k]);
        vectors.push(x);
        estimates.push(if exhausted { 0.0 } else { (last_beta * y[m - 1]).abs() });
    }
    RitzRun {
        values,
        vectors,
        estimates,
    }
}

fn lanczos_component(
    op: &OperatorMatrix,
    comp: &[usize],
    want: usize,
    norm_estimate: f64,
    opts: &SolverOptions,
) -> Result<Vec<Eigenpair>> {
    let block = op.sub_block(comp);
    let n = comp.len();
    let tol = opts.tol * norm_estimate.max(f64::MIN_POSITIVE) * 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (comp[0] as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let matvec = |x: &[C64], y: &mut [C64]| block.apply_into(x, y);
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut steps = (2 * want + 40).min(opts.max_krylov).min(n);
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        if locked.len() >= n {
            break;
        }
        let Some(start) = random_unit(n, &mut rng, &locked) else {
            break;
        };
        let run = lanczos_run(n, &matvec, start, &locked, steps.min(n - locked.len()));
        let mut any = false;
        let mut newly = Vec::new();
        for k in 0..run.values.len() {
            if run.estimates[k] > tol {
                continue;
            }
            let mut v = run.vectors[k].clone();
            orthogonalize(&mut v, &locked);
            orthogonalize(&mut v, &newly);
            let nv = norm(&v);
            if nv < 0.5 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let r = residual_of(&block, &v, run.values[k]);
            if r > 2.0 * tol {
                worst = worst.min(r);
                continue;
            }
            newly.push(v);
            locked_vals.push(run.values[k]);
            any = true;
        }
        let lowest_new = run.values.first().copied().unwrap_or(f64::INFINITY);
        let lowest_converged = run.estimates.first().is_some_and(|&e| e <= tol);
        locked.extend(newly);
        if locked.len() >= want {
            let mut sorted = locked_vals.clone();
            sorted.sort_by(f64::total_cmp);
            let threshold = sorted[want - 1];
            // a fresh run orthogonal to everything locked found nothing lower
            if lowest_converged && lowest_new >= threshold - tol {
                break;
            }
            if locked.len() >= n {
                break;
            }
        }
        if !any {
            steps = (steps * 2).min(opts.max_krylov).min(n);
        }
    }
    if locked.len() < want {
        return Err(Error::NoConvergence {
            iterations: opts.max_restarts,
            residual: worst,
        });
    }
    let mut out: Vec<Eigenpair> = locked
        .into_iter()
        .zip(locked_vals)
        .map(|(v, value)| Eigenpair {
            value,
            residual: residual_of(&block, &v, value),
            vector: SparseVector {
                indices: comp.to_vec(),
                values: v,
            },
        })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// Extreme eigenvalues `(min, max)` of a hermitian operator given only its
/// action, from a single Lanczos run of `steps` vectors.
pub fn extremal_eigenvalues(dim: usize, matvec: &dyn Fn(&[C64], &mut [C64]), steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_unit(dim, &mut rng, &[]).expect("non-empty space");
    let run = lanczos_run(dim, matvec, start, &[], steps.min(dim).max(1));
    (run.values[0], *run.values.last().unwrap())
}
