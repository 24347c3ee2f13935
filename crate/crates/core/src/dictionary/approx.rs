use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sukro::{SukroDictionary, SukroShape};
use super::{DenseDictionary, Dictionary};
use crate::linalg::{dist2, norm2};
use crate::solver::lipschitz_bound;
use crate::{check_len, Error, Result};

/// Concrete operator behind an [`ApproxDictionary`].
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(Arc<DenseDictionary>),
    Sukro(SukroDictionary),
}

impl Dictionary for Operator {
    fn nrows(&self) -> usize {
        match self {
            Operator::Dense(d) => d.nrows(),
            Operator::Sukro(s) => s.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Operator::Dense(d) => d.ncols(),
            Operator::Sukro(s) => s.ncols(),
        }
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Operator::Dense(d) => d.apply_into(x, out),
            Operator::Sukro(s) => s.apply_into(x, out),
        }
    }

    fn apply_adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        match self {
            Operator::Dense(d) => d.apply_adjoint_into(r, out),
            Operator::Sukro(s) => s.apply_adjoint_into(r, out),
        }
    }

    fn matvec_cost(&self) -> u64 {
        match self {
            Operator::Dense(d) => d.matvec_cost(),
            Operator::Sukro(s) => s.matvec_cost(),
        }
    }

    fn apply_restricted(&self, active: &[usize], x_active: &[f64], out: &mut [f64]) {
        match self {
            Operator::Dense(d) => d.apply_restricted(active, x_active, out),
            Operator::Sukro(s) => s.apply_restricted(active, x_active, out),
        }
    }

    fn adjoint_restricted(&self, active: &[usize], r: &[f64], out: &mut [f64]) {
        match self {
            Operator::Dense(d) => d.adjoint_restricted(active, r, out),
            Operator::Sukro(s) => s.adjoint_restricted(active, r, out),
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        match self {
            Operator::Dense(d) => d.column(j),
            Operator::Sukro(s) => s.column(j),
        }
    }
}

/// An approximation `Ã` of the exact dictionary `A` together with the
/// certified error bounds needed by stable screening.
#[derive(Debug, Clone)]
pub struct ApproxDictionary {
    operator: Operator,
    /// `ε_j ≥ ‖ã_j − a_j‖₂`
    atom_error_bounds: Vec<f64>,
    /// `𝓔 ≥ ‖A − Ã‖_{1→2} = max_j ‖ã_j − a_j‖₂`
    operator_error_bound: f64,
    relative_complexity: f64,
    /// `RC · N · K`, the per-product cost used by the flop model.
    complexity_cost: u64,
    approx_atom_norms: Vec<f64>,
    exact_atom_norms: Vec<f64>,
    lipschitz: f64,
}

impl ApproxDictionary {
    /// The exact dictionary viewed as its own (error-free) approximation.
    pub fn exact(a: Arc<DenseDictionary>) -> Self {
        let k = a.ncols();
        let norms = a.atom_norms().to_vec();
        let cost = a.matvec_cost();
        let op = Operator::Dense(a);
        let lipschitz = lipschitz_bound(&op, None);
        Self {
            operator: op,
            atom_error_bounds: vec![0.0; k],
            operator_error_bound: 0.0,
            relative_complexity: 1.0,
            complexity_cost: cost,
            approx_atom_norms: norms.clone(),
            exact_atom_norms: norms,
            lipschitz,
        }
    }

    /// Measure per-atom errors of `operator` against `exact` and wrap it.
    ///
    /// The relative complexity is the operator's theoretical matvec cost over `N·K`.
    pub fn certify(operator: Operator, exact: &DenseDictionary) -> Result<Self> {
        check_len(exact.nrows(), operator.nrows())?;
        check_len(exact.ncols(), operator.ncols())?;
        let k = exact.ncols();
        let mut eps = Vec::with_capacity(k);
        let mut approx_norms = Vec::with_capacity(k);
        for j in 0..k {
            let col = operator.column(j);
            eps.push(dist2(&col, exact.col(j)));
            approx_norms.push(norm2(&col));
        }
        let cost = operator.matvec_cost();
        let rc = cost as f64 / exact.matvec_cost() as f64;
        let lipschitz = lipschitz_bound(&operator, None);
        Ok(Self {
            operator,
            operator_error_bound: eps.iter().copied().fold(0.0, f64::max),
            atom_error_bounds: eps,
            relative_complexity: rc,
            complexity_cost: cost,
            approx_atom_norms: approx_norms,
            exact_atom_norms: exact.atom_norms().to_vec(),
            lipschitz,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn atom_error_bounds(&self) -> &[f64] {
        &self.atom_error_bounds
    }

    pub fn operator_error_bound(&self) -> f64 {
        self.operator_error_bound
    }

    pub fn relative_complexity(&self) -> f64 {
        self.relative_complexity
    }

    pub fn complexity_cost(&self) -> u64 {
        self.complexity_cost
    }

    pub fn approx_atom_norms(&self) -> &[f64] {
        &self.approx_atom_norms
    }

    pub fn exact_atom_norms(&self) -> &[f64] {
        &self.exact_atom_norms
    }

    /// Lipschitz bound `L ≥ ‖Ã‖²` of the unrestricted operator.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_exact(&self) -> bool {
        self.operator_error_bound == 0.0
    }

    /// Override the relative complexity (e.g. with a measured value).
    pub fn set_relative_complexity(&mut self, rc: f64) -> Result<()> {
        if !(rc > 0.0 && rc <= 1.0) {
            return Err(Error::InvalidArgument(format!("relative complexity {rc} outside (0, 1]")));
        }
        let nk = (self.operator.nrows() * self.operator.ncols()) as f64;
        self.relative_complexity = rc;
        self.complexity_cost = libm::round(rc * nk) as u64;
        Ok(())
    }

    /// Raise the atom bounds to at least `floor` (keeps them valid, enforces nesting).
    fn raise_bounds(&mut self, floor: &[f64]) {
        for (e, &f) in self.atom_error_bounds.iter_mut().zip(floor) {
            *e = e.max(f);
        }
        self.operator_error_bound = self.atom_error_bounds.iter().copied().fold(0.0, f64::max);
    }
}

impl Dictionary for ApproxDictionary {
    fn nrows(&self) -> usize {
        self.operator.nrows()
    }
    fn ncols(&self) -> usize {
        self.operator.ncols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.operator.apply_into(x, out)
    }
    fn apply_adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        self.operator.apply_adjoint_into(r, out)
    }
    fn matvec_cost(&self) -> u64 {
        self.operator.matvec_cost()
    }
    fn apply_restricted(&self, active: &[usize], x_active: &[f64], out: &mut [f64]) {
        self.operator.apply_restricted(active, x_active, out)
    }
    fn adjoint_restricted(&self, active: &[usize], r: &[f64], out: &mut [f64]) {
        self.operator.adjoint_restricted(active, r, out)
    }
    fn column(&self, j: usize) -> Vec<f64> {
        self.operator.column(j)
    }
}

/// `{Ã^0, …, Ã^I}` with `Ã^I = A`: strictly increasing relative complexity,
/// component-wise non-increasing error bounds.
#[derive(Debug, Clone)]
pub struct ApproxSequence {
    dicts: Vec<ApproxDictionary>,
    exact: Arc<DenseDictionary>,
}

impl ApproxSequence {
    /// Validate and assemble a sequence; `exact` is appended as the last element.
    pub fn new(approximations: Vec<ApproxDictionary>, exact: Arc<DenseDictionary>) -> Result<Self> {
        let mut dicts = approximations;
        dicts.push(ApproxDictionary::exact(exact.clone()));
        let seq = Self { dicts, exact };
        seq.validate()?;
        Ok(seq)
    }

    /// The degenerate sequence `{A}`.
    pub fn exact_only(exact: Arc<DenseDictionary>) -> Self {
        Self { dicts: vec![ApproxDictionary::exact(exact.clone())], exact }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.exact.nrows(), self.exact.ncols());
        for d in &self.dicts {
            check_len(n, d.nrows())?;
            check_len(k, d.ncols())?;
        }
        for w in self.dicts.windows(2) {
            if !(w[0].relative_complexity < w[1].relative_complexity) {
                return Err(Error::InvalidArgument(format!(
                    "relative complexities must increase strictly ({} then {})",
                    w[0].relative_complexity, w[1].relative_complexity
                )));
            }
            if w[0].atom_error_bounds.iter().zip(&w[1].atom_error_bounds).any(|(a, b)| a < b) {
                return Err(Error::InvalidArgument(
                    "atom error bounds must be non-increasing along the sequence".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dicts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index `I` of the exact dictionary.
    pub fn last_index(&self) -> usize {
        self.dicts.len() - 1
    }

    pub fn get(&self, i: usize) -> &ApproxDictionary {
        &self.dicts[i]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ApproxDictionary> {
        self.dicts.iter()
    }

    pub fn exact(&self) -> &Arc<DenseDictionary> {
        &self.exact
    }

    /// Override the relative complexities of the approximations (not of `A`).
    pub fn with_relative_complexities(mut self, rcs: &[f64]) -> Result<Self> {
        check_len(self.last_index(), rcs.len())?;
        for (d, &rc) in self.dicts.iter_mut().zip(rcs) {
            d.set_relative_complexity(rc)?;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Approximations of `a` by sums of `ranks[i]` Kronecker products with square
/// factors `√N × √K`, followed by `a` itself.
pub fn build_sukro_sequence(a: impl Into<Arc<DenseDictionary>>, ranks: &[usize]) -> Result<ApproxSequence> {
    let a = a.into();
    let shape = SukroShape::square(a.nrows(), a.ncols())?;
    build_sukro_sequence_with_shape(a, shape, ranks)
}

/// As [`build_sukro_sequence`] with arbitrary factor shapes.
pub fn build_sukro_sequence_with_shape(
    a: impl Into<Arc<DenseDictionary>>,
    shape: SukroShape,
    ranks: &[usize],
) -> Result<ApproxSequence> {
    let a = a.into();
    let approximations = sukro_approximations(&a, shape, ranks)?;
    ApproxSequence::new(approximations, a)
}

/// Certified sum-of-Kronecker approximations of `a`, one per rank, without the
/// cost ordering checks of [`ApproxSequence`].
///
/// Factors come from the truncated SVD of the rearranged matrix
/// `R[(i1,j1),(i2,j2)] = A[(i1,i2),(j1,j2)]`, for which `B ⊗ C` maps to `vec(B) vec(C)ᵀ`.
/// Error bounds are measured column by column and then raised to the running
/// maximum over finer approximations so the sequence nests.
pub fn sukro_approximations(
    a: &DenseDictionary,
    shape: SukroShape,
    ranks: &[usize],
) -> Result<Vec<ApproxDictionary>> {
    check_len(shape.nrows(), a.nrows())?;
    check_len(shape.ncols(), a.ncols())?;
    if ranks.contains(&0) || ranks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ranks must be positive and strictly increasing".into()));
    }
    let Some(&max_rank) = ranks.last() else {
        return Ok(Vec::new());
    };
    let (rows, cols) = (shape.n1 * shape.k1, shape.n2 * shape.k2);
    if max_rank > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "rank {max_rank} exceeds the Kronecker rank limit {}",
            rows.min(cols)
        )));
    }
    let full = kronecker_factors(a, shape, max_rank)?;
    let mut approximations = ranks
        .iter()
        .map(|&r| ApproxDictionary::certify(Operator::Sukro(full.truncated(r)?), a))
        .collect::<Result<Vec<_>>>()?;
    for i in (0..approximations.len().saturating_sub(1)).rev() {
        let floor = approximations[i + 1].atom_error_bounds.clone();
        approximations[i].raise_bounds(&floor);
    }
    Ok(approximations)
}

fn rearrange(a: &DenseDictionary, shape: SukroShape) -> DMatrix<f64> {
    let SukroShape { n1, n2, k1, k2 } = shape;
    DMatrix::from_fn(n1 * k1, n2 * k2, |r, c| {
        let (i1, j1) = (r / k1, r % k1);
        let (i2, j2) = (c / k2, c % k2);
        a.get(i1 * n2 + i2, j1 * k2 + j2)
    })
}

/// Nearest sum of `rank` Kronecker products, via the rearranged matrix.
fn kronecker_factors(a: &DenseDictionary, shape: SukroShape, rank: usize) -> Result<SukroDictionary> {
    let r = rearrange(a, shape);
    let (s, u, v) = truncated_svd(&r, rank)?;
    let terms = (0..rank)
        .map(|k| {
            let w = libm::sqrt(s[k]);
            let b: Vec<f64> = u.column(k).iter().map(|x| x * w).collect();
            let c: Vec<f64> = v.column(k).iter().map(|x| x * w).collect();
            (b, c)
        })
        .collect();
    SukroDictionary::new(shape, terms)
}

const DIRECT_SVD_LIMIT: usize = 400;
const OVERSAMPLING: usize = 10;
const POWER_STEPS: usize = 4;
const SVD_EPS: f64 = 1e-14;

/// Leading `rank` singular triplets, descending. Direct SVD for small inputs,
/// randomized subspace iteration otherwise.
fn truncated_svd(m: &DMatrix<f64>, rank: usize) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    if rows.min(cols) <= DIRECT_SVD_LIMIT {
        return sorted_svd(m.clone(), rank, None);
    }
    let l = (rank + OVERSAMPLING).min(rows.min(cols));
    let mut rng = ChaCha8Rng::seed_from_u64(0x005E_ED0F_5EED);
    let omega = DMatrix::<f64>::from_fn(cols, l, |_, _| StandardNormal.sample(&mut rng));
    let mut y = m * omega;
    for _ in 0..POWER_STEPS {
        let q = y.qr().q();
        let z = m.tr_mul(&q);
        let qz = z.qr().q();
        y = m * qz;
    }
    let q = y.qr().q();
    let small = q.tr_mul(m);
    sorted_svd(small, rank, Some(&q))
}

fn sorted_svd(
    m: DMatrix<f64>,
    rank: usize,
    left_basis: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    // The default convergence threshold mishandles exactly rank-deficient input.
    let scale = m.norm();
    let svd = m
        .clone()
        .try_svd(true, true, SVD_EPS, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (u, vt) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(vt)) => (u.clone(), vt.clone()),
        _ => return Err(Error::Numerical("SVD did not return singular vectors".into())),
    };
    let sv = svd.singular_values.clone();
    let rec = svd.recompose().map_err(|e| Error::Numerical(e.into()))?;
    if (rec - &m).norm() > 1e-8 * scale.max(1e-300) {
        return Err(Error::Numerical("SVD reconstruction check failed".into()));
    }
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    if order.len() < rank {
        return Err(Error::Numerical(format!("SVD returned {} < {rank} triplets", order.len())));
    }
    let s: Vec<f64> = order[..rank].iter().map(|&i| sv[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), rank, |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(vt.ncols(), rank, |r, c| vt[(order[c], r)]);
    let u = match left_basis {
        Some(q) => q * u,
        None => u,
    };
    Ok((s, u, v))
}
