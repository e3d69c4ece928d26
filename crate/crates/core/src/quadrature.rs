//! One-dimensional quadrature rules.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`, ascending
/// nodes. Exact for polynomials of degree `2 * order - 1`.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > 400 {
        return Err(invalid("order", format!("Gauss-Hermite order {order} outside 1..=400")));
    }
    let n = order;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (p1, d) = orthonormal_hermite_and_derivative(n, z, pim4);
            pp = d;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = orthonormal_hermite_and_derivative(n, z, pim4);
        pp = if d != 0.0 { d } else { pp };
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

fn orthonormal_hermite_and_derivative(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    let pp = (2.0 * n as f64).sqrt() * p2;
    (p1, pp)
}

/// Normalized Hermite polynomials `H_k(y) / sqrt(2^k k! sqrt(pi))` for
/// `k = 0..levels`, so that `h_k(y) * exp(-y^2/2)` are the orthonormal
/// Hermite functions.
pub fn normalized_hermite(levels: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels);
    if levels == 0 {
        return out;
    }
    out.push(PI.powf(-0.25));
    if levels > 1 {
        out.push(2f64.sqrt() * y * out[0]);
    }
    for k in 1..levels.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Composite Simpson rule on `[a, b]` with `intervals` (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gh_moments_exact() {
        // int x^{2k} e^{-x^2} = Gamma(k + 1/2)
        for order in [2usize, 5, 10, 40, 100] {
            let (x, w) = gauss_hermite(order).unwrap();
            let mut gamma = PI.sqrt();
            for k in 0..order {
                let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k as i32)).sum();
                assert!((m - gamma).abs() <= 1e-12 * gamma, "order {order} k {k}: {m} vs {gamma}");
                gamma *= k as f64 + 0.5;
                let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k as i32 + 1)).sum();
                assert!(odd.abs() <= 1e-12 * gamma.max(1.0));
            }
        }
    }

    #[test]
    fn gh_nodes_sorted() {
        let (x, _) = gauss_hermite(7).unwrap();
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(x[3], 0.0);
    }

    #[test]
    fn rejects_zero_order() {
        assert!(gauss_hermite(0).is_err());
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let (x, w) = gauss_hermite(30).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&y, &wt)| {
                        let h = normalized_hermite(8, y);
                        wt * h[a] * h[b]
                    })
                    .sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn simpson_cubic_exact() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
