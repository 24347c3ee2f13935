//! Dictionary operators: dense matrices, sums of Kronecker products, and the
//! certified approximation sequences consumed by FastL1.

mod approx;
mod scenario;
mod sukro;

pub use approx::{
    build_sukro_sequence, build_sukro_sequence_with_shape, sukro_approximations, ApproxDictionary, ApproxSequence,
    Operator,
};
pub use scenario::{synthesize_scenario, synthesize_scenario_with_shape, Scenario};
pub use sukro::{SukroDictionary, SukroShape};

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, dot, norm2};
use crate::{check_len, Error, Result};

/// A linear operator `A: R^K -> R^N` whose columns are the atoms.
pub trait Dictionary {
    /// Signal dimension `N`.
    fn nrows(&self) -> usize;
    /// Number of atoms `K`.
    fn ncols(&self) -> usize;

    /// `out = A x`, no length checks.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = Aᵀ r`, no length checks.
    fn apply_adjoint_into(&self, r: &[f64], out: &mut [f64]);

    /// Multiply-adds of one full matvec under the complexity model.
    fn matvec_cost(&self) -> u64;

    /// `out = A[:, active] x_active`.
    fn apply_restricted(&self, active: &[usize], x_active: &[f64], out: &mut [f64]) {
        let mut full = vec![0.0; self.ncols()];
        for (&j, &v) in active.iter().zip(x_active) {
            full[j] = v;
        }
        self.apply_into(&full, out);
    }

    /// `out[k] = a_{active[k]}ᵀ r`.
    fn adjoint_restricted(&self, active: &[usize], r: &[f64], out: &mut [f64]) {
        let mut full = vec![0.0; self.ncols()];
        self.apply_adjoint_into(r, &mut full);
        for (o, &j) in out.iter_mut().zip(active) {
            *o = full[j];
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.ncols()];
        e[j] = 1.0;
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(&e, &mut out);
        out
    }

    fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), x.len())?;
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn adjoint_matvec(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nrows(), r.len())?;
        let mut out = vec![0.0; self.ncols()];
        self.apply_adjoint_into(r, &mut out);
        Ok(out)
    }
}

/// Dense `N × K` dictionary stored column-major, with cached ℓ2 atom norms.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDictionary {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
    atom_norms: Vec<f64>,
}

impl DenseDictionary {
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidArgument("dictionary must be at least 1x1".into()));
        }
        check_len(nrows * ncols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dictionary has non-finite entries".into()));
        }
        let atom_norms = data.chunks_exact(nrows).map(norm2).collect();
        Ok(Self { nrows, ncols, data, atom_norms })
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        check_len(nrows * ncols, data.len())?;
        let mut cm = vec![0.0; data.len()];
        for i in 0..nrows {
            for j in 0..ncols {
                cm[j * nrows + i] = data[i * ncols + j];
            }
        }
        Self::from_col_major(nrows, ncols, cm)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows
            .iter()
            .map(|r| check_len(ncols, r.len()).map(|_| r.as_slice()))
            .collect::<Result<Vec<_>>>()?
            .concat();
        Self::from_row_major(nrows, ncols, &flat)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_col_major(n, n, data).expect("identity is well formed")
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    pub fn atom_norms(&self) -> &[f64] {
        &self.atom_norms
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    /// Scale every column to unit ℓ2 norm (zero columns are left untouched).
    pub fn normalize_columns(&mut self) {
        let n = self.nrows;
        for (col, norm) in self.data.chunks_exact_mut(n).zip(self.atom_norms.iter_mut()) {
            if *norm > 0.0 {
                col.iter_mut().for_each(|v| *v /= *norm);
                *norm = norm2(col);
            }
        }
    }
}

impl Dictionary for DenseDictionary {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), out);
            }
        }
    }

    fn apply_adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.col(j), r);
        }
    }

    fn matvec_cost(&self) -> u64 {
        (self.nrows * self.ncols) as u64
    }

    fn apply_restricted(&self, active: &[usize], x_active: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&j, &xj) in active.iter().zip(x_active) {
            if xj != 0.0 {
                axpy(xj, self.col(j), out);
            }
        }
    }

    fn adjoint_restricted(&self, active: &[usize], r: &[f64], out: &mut [f64]) {
        for (o, &j) in out.iter_mut().zip(active) {
            *o = dot(self.col(j), r);
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.col(j).to_vec()
    }
}
