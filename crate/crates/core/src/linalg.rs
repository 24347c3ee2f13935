//! Small dense vector kernels shared by the other modules.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators: lets the compiler vectorize without reassociating
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(norm2_sq(a))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn nnz(a: &[f64]) -> usize {
    a.iter().filter(|v| **v != 0.0).count()
}

/// Euclidean distance `‖a − b‖₂`.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// `apply(v, out)` must write `M v` into `out`. The returned value is the
/// final Rayleigh quotient together with the last normalized iterate, which
/// callers can reuse to warm-start a later estimate.
pub fn power_iteration<F>(
    dim: usize,
    mut apply: F,
    start: Option<&[f64]>,
    max_iter: usize,
    rel_tol: f64,
) -> (f64, Vec<f64>)
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return (0.0, Vec::new());
    }
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == dim && norm2(s) > 0.0 => s.to_vec(),
        // deterministic, non-degenerate start
        _ => (0..dim).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0).collect(),
    };
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        apply(&v, &mut w);
        let rq = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return (0.0, v);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        let done = (rq - estimate).abs() <= rel_tol * rq.abs();
        estimate = rq;
        if done {
            break;
        }
    }
    (estimate, v)
}
