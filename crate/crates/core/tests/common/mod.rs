//! Test-only reference Lasso solver, independent of the library's solvers.
#![allow(dead_code)]

use fastl1_core::{DenseDictionary, Dictionary};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Oracle {
    pub x: Vec<f64>,
    /// `θ* = (y − A x*)/λ`
    pub theta: Vec<f64>,
    pub gap: f64,
}

impl Oracle {
    pub fn support(&self) -> Vec<usize> {
        self.x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect()
    }
}

fn col_dot(a: &DenseDictionary, j: usize, r: &[f64]) -> f64 {
    a.col(j).iter().zip(r).map(|(p, q)| p * q).sum()
}

fn soft(z: f64, u: f64) -> f64 {
    z.signum() * (z.abs() - u).max(0.0)
}

pub fn gap_of(a: &DenseDictionary, y: &[f64], lambda: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let n = a.nrows();
    let mut r = y.to_vec();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for i in 0..n {
                r[i] -= a.get(i, j) * xj;
            }
        }
    }
    let m = (0..a.ncols()).map(|j| col_dot(a, j, &r).abs()).fold(0.0, f64::max);
    let s = lambda.max(m);
    let theta: Vec<f64> = r.iter().map(|v| v / s).collect();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    let primal = 0.5 * rr + lambda * x.iter().map(|v| v.abs()).sum::<f64>();
    let d2: f64 = theta.iter().zip(y).map(|(t, yi)| (t - yi / lambda).powi(2)).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let dual = 0.5 * yy - 0.5 * lambda * lambda * d2;
    (primal - dual, r)
}

/// Cyclic coordinate descent to `gap ≤ target`, then an exact solve of the
/// KKT system on the detected support with sign pattern fixed.
pub fn solve(a: &DenseDictionary, y: &[f64], lambda: f64, target: f64) -> Oracle {
    let (n, k) = (a.nrows(), a.ncols());
    let sq: Vec<f64> = (0..k).map(|j| a.col(j).iter().map(|v| v * v).sum()).collect();
    let mut x = vec![0.0; k];
    let mut r = y.to_vec();
    let mut gap = f64::INFINITY;
    for sweep in 0..200_000 {
        for j in 0..k {
            let old = x[j];
            let z = old + col_dot(a, j, &r) / sq[j];
            let new = soft(z, lambda / sq[j]);
            if new != old {
                let d = new - old;
                for (ri, aij) in r.iter_mut().zip(a.col(j)) {
                    *ri -= aij * d;
                }
                x[j] = new;
            }
        }
        if sweep % 10 == 0 {
            gap = gap_of(a, y, lambda, &x).0;
            if gap <= target {
                break;
            }
        }
    }
    assert!(gap <= target, "oracle did not reach gap {target}: {gap}");

    // polish on the support
    let support: Vec<usize> = (0..k).filter(|&j| x[j] != 0.0).collect();
    if !support.is_empty() {
        let s = support.len();
        let as_ = DMatrix::from_fn(n, s, |i, c| a.get(i, support[c]));
        let signs: Vec<f64> = support.iter().map(|&j| x[j].signum()).collect();
        let rhs = as_.transpose() * DVector::from_column_slice(y) - DVector::from_vec(signs.clone()) * lambda;
        if let Some(sol) = (as_.transpose() * &as_).lu().solve(&rhs) {
            let sign_ok = sol.iter().zip(&signs).all(|(v, s)| v * s > 0.0);
            let mut xp = vec![0.0; k];
            for (c, &j) in support.iter().enumerate() {
                xp[j] = sol[c];
            }
            let (gp, _) = gap_of(a, y, lambda, &xp);
            if sign_ok && gp <= gap.max(1e-14) {
                x = xp;
                gap = gp;
            }
        }
    }
    let (_, r) = gap_of(a, y, lambda, &x);
    let theta = r.iter().map(|v| v / lambda).collect();
    Oracle { x, theta, gap }
}

pub fn random_dense(n: usize, k: usize, seed: u64) -> DenseDictionary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut a = DenseDictionary::from_col_major(n, k, data).unwrap();
    a.normalize_columns();
    a
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `y = A x` for a sparse Gaussian `x`, scaled to unit norm.
pub fn sparse_signal(a: &DenseDictionary, p: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (a.nrows(), a.ncols());
    let mut y = vec![0.0; n];
    let mut any = false;
    while !any {
        for j in 0..k {
            if rng.random::<f64>() < p {
                any = true;
                let v: f64 = StandardNormal.sample(&mut rng);
                for i in 0..n {
                    y[i] += a.get(i, j) * v;
                }
            }
        }
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter().map(|v| v / norm).collect()
}

pub fn lambda_max_direct(a: &DenseDictionary, y: &[f64]) -> f64 {
    (0..a.ncols()).map(|j| col_dot(a, j, y).abs()).fold(0.0, f64::max)
}
