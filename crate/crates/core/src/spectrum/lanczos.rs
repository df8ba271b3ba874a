//! Lanczos iteration with full reorthogonalization for the two lowest
//! eigenvalues of a real symmetric operator given only as a matvec.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::seeded_rng;

const START_SEED: u64 = 0x1a2c_2050_5eed;

pub(crate) struct LanczosOptions {
    pub max_iter: usize,
    /// Eigenvalue error bound relative to the spectral scale.
    pub rel_tol: f64,
    /// Cap on the Ritz residual relative to the spectral scale.
    pub max_residual: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 600,
            rel_tol: 1e-12,
            max_residual: 1e-5,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`
/// (Sturm sequence count).
fn count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in alpha.iter().enumerate() {
        let off = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = a - x - if i == 0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `r`-th smallest eigenvalue (0-based) of the tridiagonal matrix by
/// bisection inside its Gershgorin interval.
fn tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64], r: usize) -> f64 {
    let k = alpha.len();
    let radius = |i: usize| {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { beta[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..k).map(|i| alpha[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alpha, beta, mid) > r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn lowest_ritz_pair(alpha: &[f64], beta: &[f64]) -> [f64; 2] {
    let second = if alpha.len() > 1 { 1 } else { 0 };
    [
        tridiagonal_eigenvalue(alpha, beta, 0),
        tridiagonal_eigenvalue(alpha, beta, second),
    ]
}

/// Three smallest Ritz values of the tridiagonal matrix and the magnitude of
/// the last eigenvector component for the two smallest.
fn ritz_with_residual_weights(alpha: &[f64], beta: &[f64]) -> ([f64; 3], [f64; 2]) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pick = |r: usize| {
        let c = order[r.min(k - 1)];
        (eig.eigenvalues[c], eig.eigenvectors[(k - 1, c)].abs())
    };
    let (v0, l0) = pick(0);
    let (v1, l1) = pick(1);
    let v2 = if k > 2 { pick(2).0 } else { f64::INFINITY };
    ([v0, v1, v2], [l0, l1])
}

/// Kato-Temple style bound on the distance between a Ritz value and the
/// eigenvalue it approximates: `min(r, r^2 / gap)`.
fn error_bound(residual: f64, gap: f64) -> f64 {
    if gap > 0.0 {
        residual.min(residual * residual / gap)
    } else {
        residual
    }
}

/// Two algebraically smallest eigenvalues of the operator `apply` of
/// dimension `dim` (at least 2).
///
/// The start vector is a fixed pseudo-random vector, so results are
/// reproducible. A multiple eigenvalue is only resolved once by a single
/// Krylov sequence; callers rely on the ground state being simple.
pub(crate) fn two_lowest<F>(dim: usize, scale: f64, opts: &LanczosOptions, mut apply: F) -> Result<(f64, f64)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    debug_assert!(dim >= 2);
    let mut rng = seeded_rng(START_SEED);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let max_iter = opts.max_iter.min(dim);
    let tol = opts.rel_tol * scale.max(1.0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter.min(128));
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;

    let mut prev_ritz = [f64::INFINITY; 2];
    let mut next_check = 0;
    for j in 0..max_iter {
        apply(&v, &mut w);
        let a = dot(&v, &w);
        axpy(-a, &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(std::mem::take(&mut v));
        alpha.push(a);
        // Gram-Schmidt against the whole basis, repeated when cancellation
        // was severe
        for _ in 0..2 {
            let before = dot(&w, &w);
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
            if dot(&w, &w) > 0.5 * before {
                break;
            }
        }
        let b = dot(&w, &w).sqrt();
        let k = j + 1;
        let invariant = b <= tol * 1e-3 || k == dim;
        if k >= 2 {
            let ritz = lowest_ritz_pair(&alpha, &beta);
            let settled = (ritz[0] - prev_ritz[0]).abs() <= tol && (ritz[1] - prev_ritz[1]).abs() <= tol;
            prev_ritz = ritz;
            if invariant {
                return Ok((ritz[0], ritz[1]));
            }
            if (settled && k >= next_check) || k == max_iter {
                let (vals, last) = ritz_with_residual_weights(&alpha, &beta);
                let (r0, r1) = (b * last[0], b * last[1]);
                let gap01 = vals[1] - vals[0];
                let err0 = error_bound(r0, gap01);
                let err1 = error_bound(r1, gap01.min(vals[2] - vals[1]));
                last_residual = r0.max(r1);
                if err0.max(err1) <= tol && last_residual <= opts.max_residual * scale.max(1.0) {
                    return Ok((vals[0], vals[1]));
                }
                next_check = k + 4;
            }
        }
        if k == max_iter || invariant {
            break;
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}
