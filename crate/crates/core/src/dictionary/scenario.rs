use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sukro::SukroShape;
use super::DenseDictionary;
use crate::{Error, Result};

/// How well the dictionary is approximated by few Kronecker terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Easy,
    Moderate,
    Hard,
}

/// Number of Kronecker terms per decay step of the rearranged spectrum.
const TERMS_PER_STEP: f64 = 5.0;
const MAX_TERMS: usize = 120;

impl Scenario {
    /// Singular-value ratio of the rearranged matrix over [`TERMS_PER_STEP`] terms.
    pub fn decay_ratio(self) -> f64 {
        match self {
            Scenario::Easy => 0.3,
            Scenario::Moderate => 0.6,
            Scenario::Hard => 0.85,
        }
    }

    /// Suggested switching threshold Γ.
    pub fn default_gamma(self) -> f64 {
        match self {
            Scenario::Easy => 0.2,
            Scenario::Moderate => 0.25,
            Scenario::Hard => 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Easy => "easy",
            Scenario::Moderate => "moderate",
            Scenario::Hard => "hard",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Scenario::Easy),
            "moderate" => Ok(Scenario::Moderate),
            "hard" => Ok(Scenario::Hard),
            other => Err(Error::InvalidArgument(alloc::format!("unknown scenario '{other}'"))),
        }
    }
}

/// Synthetic `N × K` dictionary with square Kronecker factors.
pub fn synthesize_scenario(n: usize, k: usize, scenario: Scenario, seed: u64) -> Result<DenseDictionary> {
    synthesize_scenario_with_shape(SukroShape::square(n, k)?, scenario, seed)
}

/// `A = Σ_k σ_k B_k ⊗ C_k` with random unit-Frobenius factors and
/// `σ_k = ratio^(k / 5)`, then unit-norm columns. Deterministic in `seed`.
pub fn synthesize_scenario_with_shape(
    shape: SukroShape,
    scenario: Scenario,
    seed: u64,
) -> Result<DenseDictionary> {
    let SukroShape { n1, n2, k1, k2 } = shape;
    let (rows, cols) = (n1 * k1, n2 * k2);
    let terms = rows.min(cols).min(MAX_TERMS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));

    // Leading terms: for every column j1, the columns B_k[:, j1] are orthonormal
    // across k (scaled by 1/√k1). Cross terms then vanish from the column norms,
    // which become a function of j2 alone, so normalizing the columns keeps the
    // Kronecker rank.
    let orth = terms.min(n1);
    let mut u = DMatrix::<f64>::zeros(rows, terms);
    let w = 1.0 / libm::sqrt(k1 as f64);
    for j1 in 0..k1 {
        let q = gauss(n1, n1).qr().q();
        for t in 0..orth {
            for i1 in 0..n1 {
                u[(i1 * k1 + j1, t)] = w * q[(i1, t)];
            }
        }
    }
    if terms > orth {
        let rest = gauss(rows, terms - orth);
        for t in orth..terms {
            let c = rest.column(t - orth);
            u.column_mut(t).copy_from(&(c / c.norm()));
        }
    }
    let mut v = gauss(cols, terms);
    let ratio = scenario.decay_ratio();
    for t in 0..terms {
        let sigma = libm::pow(ratio, t as f64 / TERMS_PER_STEP);
        u.column_mut(t).scale_mut(sigma);
        let nv = v.column(t).norm();
        v.column_mut(t).scale_mut(1.0 / nv);
    }
    let r = u * v.transpose();

    let (n, k) = (shape.nrows(), shape.ncols());
    let mut data = Vec::with_capacity(n * k);
    for j in 0..k {
        let (j1, j2) = (j / k2, j % k2);
        for i in 0..n {
            let (i1, i2) = (i / n2, i % n2);
            data.push(r[(i1 * k1 + j1, i2 * k2 + j2)]);
        }
    }
    let mut a = DenseDictionary::from_col_major(n, k, data)?;
    a.normalize_columns();
    Ok(a)
}
