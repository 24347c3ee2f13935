use alloc::vec;
use alloc::vec::Vec;

use super::Dictionary;
use crate::linalg::{axpy, dot};
use crate::{check_len, Error, Result};

/// Factor shapes of a Kronecker-structured `N × K` operator: each term is
/// `B ⊗ C` with `B: n1 × k1` and `C: n2 × k2`, so `N = n1·n2`, `K = k1·k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SukroShape {
    pub n1: usize,
    pub n2: usize,
    pub k1: usize,
    pub k2: usize,
}

impl SukroShape {
    /// The square factorization `B, C ∈ R^{√N × √K}`.
    pub fn square(n: usize, k: usize) -> Result<Self> {
        let sn = exact_sqrt(n)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("N = {n} is not a perfect square")))?;
        let sk = exact_sqrt(k)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("K = {k} is not a perfect square")))?;
        Ok(Self { n1: sn, n2: sn, k1: sk, k2: sk })
    }

    pub fn new(n1: usize, n2: usize, k1: usize, k2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || k1 == 0 || k2 == 0 {
            return Err(Error::InvalidArgument("Kronecker factor dimensions must be positive".into()));
        }
        Ok(Self { n1, n2, k1, k2 })
    }

    pub fn nrows(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn ncols(&self) -> usize {
        self.k1 * self.k2
    }

    /// Multiply-adds of one `(B ⊗ C) x` product via `B X Cᵀ`.
    pub fn term_cost(&self) -> u64 {
        (self.n1 * self.ncols() + self.nrows() * self.k2) as u64
    }
}

pub(crate) fn exact_sqrt(n: usize) -> Option<usize> {
    let r = libm::sqrt(n as f64) as usize;
    (r.saturating_sub(1)..=r + 1).find(|c| c * c == n)
}

/// `Σ_k B_k ⊗ C_k`, factors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SukroDictionary {
    shape: SukroShape,
    terms: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SukroDictionary {
    pub fn new(shape: SukroShape, terms: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("a SuKro operator needs at least one term".into()));
        }
        for (b, c) in &terms {
            check_len(shape.n1 * shape.k1, b.len())?;
            check_len(shape.n2 * shape.k2, c.len())?;
        }
        Ok(Self { shape, terms })
    }

    pub fn shape(&self) -> SukroShape {
        self.shape
    }

    pub fn n_kron(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.terms
    }

    /// Keep only the first `n` terms.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.terms.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "cannot truncate {} terms to {n}",
                self.terms.len()
            )));
        }
        Self::new(self.shape, self.terms[..n].to_vec())
    }

    /// Explicit dense expansion, column-major. Test and diagnostics helper.
    pub fn to_dense_col_major(&self) -> Vec<f64> {
        let (n, k) = (self.shape.nrows(), self.shape.ncols());
        let mut out = vec![0.0; n * k];
        for j in 0..k {
            let col = self.column(j);
            out[j * n..(j + 1) * n].copy_from_slice(&col);
        }
        out
    }
}

impl Dictionary for SukroDictionary {
    fn nrows(&self) -> usize {
        self.shape.nrows()
    }

    fn ncols(&self) -> usize {
        self.shape.ncols()
    }

    // x is X (k1 × k2) row-major; y = vec(Σ B X Cᵀ) row-major (n1 × n2).
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let SukroShape { n1, n2, k1, k2 } = self.shape;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut bx = vec![0.0; n1 * k2];
        for (b, c) in &self.terms {
            bx.iter_mut().for_each(|v| *v = 0.0);
            for i1 in 0..n1 {
                let row = &mut bx[i1 * k2..(i1 + 1) * k2];
                for j1 in 0..k1 {
                    let bij = b[i1 * k1 + j1];
                    if bij != 0.0 {
                        axpy(bij, &x[j1 * k2..(j1 + 1) * k2], row);
                    }
                }
            }
            for i1 in 0..n1 {
                let row = &bx[i1 * k2..(i1 + 1) * k2];
                for i2 in 0..n2 {
                    out[i1 * n2 + i2] += dot(row, &c[i2 * k2..(i2 + 1) * k2]);
                }
            }
        }
    }

    // X = Σ Bᵀ R C with R = reshape(r) (n1 × n2).
    fn apply_adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let SukroShape { n1, n2, k1, k2 } = self.shape;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut btr = vec![0.0; k1 * n2];
        for (b, c) in &self.terms {
            btr.iter_mut().for_each(|v| *v = 0.0);
            for i1 in 0..n1 {
                let rrow = &r[i1 * n2..(i1 + 1) * n2];
                for j1 in 0..k1 {
                    let bij = b[i1 * k1 + j1];
                    if bij != 0.0 {
                        axpy(bij, rrow, &mut btr[j1 * n2..(j1 + 1) * n2]);
                    }
                }
            }
            for j1 in 0..k1 {
                let xrow = &mut out[j1 * k2..(j1 + 1) * k2];
                for i2 in 0..n2 {
                    let w = btr[j1 * n2 + i2];
                    if w != 0.0 {
                        axpy(w, &c[i2 * k2..(i2 + 1) * k2], xrow);
                    }
                }
            }
        }
    }

    fn matvec_cost(&self) -> u64 {
        self.terms.len() as u64 * self.shape.term_cost()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let SukroShape { n1, n2, k1, k2 } = self.shape;
        let (j1, j2) = (j / k2, j % k2);
        let mut out = vec![0.0; n1 * n2];
        for (b, c) in &self.terms {
            for i1 in 0..n1 {
                let bv = b[i1 * k1 + j1];
                if bv == 0.0 {
                    continue;
                }
                for i2 in 0..n2 {
                    out[i1 * n2 + i2] += bv * c[i2 * k2 + j2];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        m
    }

    #[test]
    fn identity_kronecker() {
        let shape = SukroShape::square(4, 4).unwrap();
        let s = SukroDictionary::new(shape, vec![(eye(2), eye(2))]).unwrap();
        assert_eq!(s.matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.adjoint_matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn kronecker_index_convention() {
        // B = [[1, 2]], C = [[3], [4]]: B ⊗ C = [[3, 6], [4, 8]]
        let shape = SukroShape::new(1, 2, 2, 1).unwrap();
        let s = SukroDictionary::new(shape, vec![(vec![1.0, 2.0], vec![3.0, 4.0])]).unwrap();
        assert_eq!(s.to_dense_col_major(), vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn square_shape_rejects_non_square() {
        assert!(SukroShape::square(50, 100).is_err());
        assert!(SukroShape::square(49, 120).is_err());
        assert_eq!(SukroShape::square(2500, 10000).unwrap().k1, 100);
    }

    #[test]
    fn cost_matches_formula() {
        let shape = SukroShape::square(2500, 10000).unwrap();
        assert_eq!(shape.term_cost(), 50 * 10000 + 2500 * 100);
    }
}
