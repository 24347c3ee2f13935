//! Safe spheres, conventional and stable screening tests, and dual scaling.
//!
//! All regions are ℓ2 balls and all atom zones are ℓ2 balls (optionally
//! intersected with the sphere of the exact atom norm), so every dual norm
//! below is the Euclidean norm and the Hölder constant of the ball test is 1.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dictionary::{ApproxDictionary, Dictionary};
use crate::linalg::{dist2, dot, norm2, norm_inf};
use crate::solver::Gap;
use crate::{check_len, Error, Result};

/// Screening rules; the stable variants only need the approximate dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Static,
    Dynamic,
    Gap,
    StableStatic,
    StableDynamic,
    StableGap,
}

impl Rule {
    pub const ALL: [Rule; 6] =
        [Rule::Static, Rule::Dynamic, Rule::Gap, Rule::StableStatic, Rule::StableDynamic, Rule::StableGap];

    pub fn is_stable(self) -> bool {
        matches!(self, Rule::StableStatic | Rule::StableDynamic | Rule::StableGap)
    }

    pub fn conventional(self) -> Rule {
        match self {
            Rule::StableStatic => Rule::Static,
            Rule::StableDynamic => Rule::Dynamic,
            Rule::StableGap => Rule::Gap,
            r => r,
        }
    }

    pub fn stable(self) -> Rule {
        match self {
            Rule::Static => Rule::StableStatic,
            Rule::Dynamic => Rule::StableDynamic,
            Rule::Gap => Rule::StableGap,
            r => r,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Static => "static",
            Rule::Dynamic => "dynamic",
            Rule::Gap => "gap",
            Rule::StableStatic => "stable-static",
            Rule::StableDynamic => "stable-dynamic",
            Rule::StableGap => "stable-gap",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        Rule::ALL
            .into_iter()
            .find(|r| r.as_str() == s || (s == "dst" && *r == Rule::Dynamic))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown screening rule '{s}'")))
    }
}

/// `B(c, R)`, certified by its constructor to contain the dual optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeSphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SafeSphere {
    pub fn contains(&self, theta: &[f64], slack: f64) -> bool {
        dist2(theta, &self.center) <= self.radius + slack
    }
}

/// `λ_max = ‖Aᵀy‖_∞`
pub fn lambda_max(dict: &dyn Dictionary, y: &[f64]) -> Result<f64> {
    Ok(norm_inf(&dict.adjoint_matvec(y)?))
}

/// `λ'_max = max_j |ã_jᵀy| + ε_j‖y‖₂ ≥ λ_max`
pub fn stable_lambda_max(approx: &ApproxDictionary, y: &[f64]) -> Result<f64> {
    let aty = approx.adjoint_matvec(y)?;
    Ok(stable_max(&aty, approx.atom_error_bounds(), norm2(y)))
}

/// `max_j |g_j| + ε_j s`
pub fn stable_max(corr: &[f64], eps: &[f64], scale: f64) -> f64 {
    corr.iter().zip(eps).fold(0.0, |m, (g, e)| m.max(g.abs() + e * scale))
}

/// Sphere test from a precomputed inner product: `|aᵀc| + R‖a‖`.
#[inline]
pub fn sphere_bound(dot_center: f64, atom_norm: f64, radius: f64) -> f64 {
    dot_center.abs() + radius * atom_norm
}

/// Restricted-zone test: `|ãᵀc| + ε‖c‖ + R a`, with `a` the exact atom norm.
#[inline]
pub fn zone_bound(dot_center: f64, eps: f64, center_norm: f64, radius: f64, exact_norm: f64) -> f64 {
    dot_center.abs() + eps * center_norm + radius * exact_norm
}

/// `sup_{θ ∈ B(c,R)} |aᵀθ|`
pub fn sphere_test(atom: &[f64], sphere: &SafeSphere) -> f64 {
    sphere_bound(dot(atom, &sphere.center), norm2(atom), sphere.radius)
}

/// Zone `{a : ‖a − ã‖₂ ≤ ε, ‖a‖₂ = a_norm}` around an approximate atom.
#[derive(Debug, Clone, Copy)]
pub struct AtomZone<'a> {
    pub approx_atom: &'a [f64],
    pub error_radius: f64,
    pub exact_atom_norm: f64,
}

/// Upper bound of `sup |aᵀθ|` over the restricted zone and the sphere.
pub fn stable_zone_test(zone: &AtomZone<'_>, sphere: &SafeSphere) -> f64 {
    zone_bound(
        dot(zone.approx_atom, &sphere.center),
        zone.error_radius,
        norm2(&sphere.center),
        sphere.radius,
        zone.exact_atom_norm,
    )
}

/// Upper bound over the unrestricted ball zone `B(ã, ε)`:
/// `|ãᵀc| + ε‖c‖ + R‖ã‖ + R ε`.
pub fn stable_ball_test(approx_atom: &[f64], error_radius: f64, sphere: &SafeSphere) -> f64 {
    let r = sphere.radius;
    dot(approx_atom, &sphere.center).abs()
        + error_radius * norm2(&sphere.center)
        + r * norm2(approx_atom)
        + r * error_radius
}

/// `Θ(z|A) = z / max(1, ‖Aᵀz‖_∞)`
pub fn dual_scale(z: &[f64], dict: &dyn Dictionary) -> Result<Vec<f64>> {
    let m = norm_inf(&dict.adjoint_matvec(z)?);
    let d = m.max(1.0);
    Ok(z.iter().map(|v| v / d).collect())
}

/// `Θ'(z|Ã, ε) = z / max(1, max_j |ã_jᵀz| + ε_j‖z‖₂)`, feasible for both `A` and `Ã`.
pub fn stable_dual_scale(z: &[f64], approx: &ApproxDictionary) -> Result<Vec<f64>> {
    let g = approx.adjoint_matvec(z)?;
    let d = stable_max(&g, approx.atom_error_bounds(), norm2(z)).max(1.0);
    Ok(z.iter().map(|v| v / d).collect())
}

/// Dual points proportional to a common base vector (the residual, or `y` when
/// the residual vanishes): `θ' = s'·base`, `θ̃ = s̃·base`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoints {
    pub theta_prime: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    pub scale_prime: f64,
    pub scale_tilde: f64,
    /// `Ãᵀ base` over the atoms the points were built for.
    pub base_correlations: Vec<f64>,
}

impl DualPoints {
    /// `Ãᵀθ'`
    pub fn prime_correlations(&self) -> Vec<f64> {
        self.base_correlations.iter().map(|g| g * self.scale_prime).collect()
    }

    pub fn tilde_correlations(&self) -> Vec<f64> {
        self.base_correlations.iter().map(|g| g * self.scale_tilde).collect()
    }
}

#[inline]
fn clamp_sym(v: f64, bound: f64) -> f64 {
    v.max(-bound).min(bound)
}

/// Residual-based dual points for the atoms `active` of `dict`.
///
/// `residual = y − Ã x` and `correlations = Ã[:,active]ᵀ residual` are reused
/// from the solver step. `eps` holds the error bounds of the same atoms (all
/// zero for an exact dictionary, in which case `θ' = θ̃`).
pub fn dual_point_dynamic(
    dict: &dyn Dictionary,
    active: &[usize],
    residual: &[f64],
    correlations: &[f64],
    eps: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<DualPoints> {
    check_len(y.len(), residual.len())?;
    check_len(active.len(), correlations.len())?;
    check_len(active.len(), eps.len())?;
    let rho_sq = dot(residual, residual);
    if rho_sq == 0.0 {
        // exact fit: scale y/λ instead
        let mut aty = vec![0.0; active.len()];
        dict.adjoint_restricted(active, y, &mut aty);
        let m_prime = stable_max(&aty, eps, norm2(y));
        let m_tilde = norm_inf(&aty);
        let scale_prime = 1.0 / lambda.max(m_prime);
        let scale_tilde = 1.0 / lambda.max(m_tilde);
        return Ok(DualPoints {
            theta_prime: y.iter().map(|v| v * scale_prime).collect(),
            theta_tilde: y.iter().map(|v| v * scale_tilde).collect(),
            scale_prime,
            scale_tilde,
            base_correlations: aty,
        });
    }
    let beta = dot(y, residual) / (lambda * rho_sq);
    let rho_norm = libm::sqrt(rho_sq);
    let m_prime = stable_max(correlations, eps, rho_norm);
    let m_tilde = norm_inf(correlations);
    let scale_prime = if m_prime > 0.0 { clamp_sym(beta, 1.0 / m_prime) } else { beta };
    let scale_tilde = if m_tilde > 0.0 { clamp_sym(beta, 1.0 / m_tilde) } else { beta };
    Ok(DualPoints {
        theta_prime: residual.iter().map(|v| v * scale_prime).collect(),
        theta_tilde: residual.iter().map(|v| v * scale_tilde).collect(),
        scale_prime,
        scale_tilde,
        base_correlations: correlations.to_vec(),
    })
}

/// Everything a sphere constructor may need at one screening instant.
#[derive(Debug, Clone, Copy)]
pub struct SphereInputs<'a> {
    pub y: &'a [f64],
    pub lambda: f64,
    /// `λ_max` for Static, `λ'_max` for Stable Static.
    pub lambda_max: f64,
    pub dual: &'a DualPoints,
    /// `P(x_t | Ã) = ½‖ρ̃‖² + λ‖x_t‖₁`
    pub primal: f64,
    pub residual_norm: f64,
    pub x_l1: f64,
    /// `𝓔 ≥ ‖A − Ã‖_{1→2}` (zero for the exact dictionary)
    pub operator_error: f64,
}

/// `δ(x) = ‖y − Ãx‖₂ 𝓔 ‖x‖₁ + ½ 𝓔² ‖x‖₁²`
pub fn gap_margin(residual_norm: f64, operator_error: f64, x_l1: f64) -> f64 {
    residual_norm * operator_error * x_l1 + 0.5 * operator_error * operator_error * x_l1 * x_l1
}

/// Center and radius of the chosen safe sphere.
pub fn build_sphere(rule: Rule, inputs: &SphereInputs<'_>) -> SafeSphere {
    let SphereInputs { y, lambda, .. } = *inputs;
    let y_over_lambda = || y.iter().map(|v| v / lambda).collect::<Vec<f64>>();
    match rule {
        Rule::Static | Rule::StableStatic => SafeSphere {
            center: y_over_lambda(),
            radius: (1.0 / inputs.lambda_max - 1.0 / lambda).abs() * norm2(y),
        },
        Rule::Dynamic | Rule::StableDynamic => {
            let theta = if rule.is_stable() { &inputs.dual.theta_prime } else { &inputs.dual.theta_tilde };
            let center = y_over_lambda();
            SafeSphere { radius: dist2(theta, &center), center }
        }
        Rule::Gap => {
            let theta = &inputs.dual.theta_tilde;
            let gap = Gap::from_objectives(inputs.primal, crate::solver::dual_value(theta, y, lambda));
            SafeSphere { center: theta.clone(), radius: libm::sqrt(2.0 * gap.value) / lambda }
        }
        Rule::StableGap => {
            let theta = &inputs.dual.theta_prime;
            let gap = Gap::from_objectives(inputs.primal, crate::solver::dual_value(theta, y, lambda));
            let delta = gap_margin(inputs.residual_norm, inputs.operator_error, inputs.x_l1);
            SafeSphere { center: theta.clone(), radius: libm::sqrt(2.0 * gap.value + 2.0 * delta) / lambda }
        }
    }
}

/// Per-atom data for the atoms still in the preserved set, in `active` order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomBounds {
    pub eps: Vec<f64>,
    pub approx_norms: Vec<f64>,
    pub exact_norms: Vec<f64>,
}

impl AtomBounds {
    pub fn gather(dict: &ApproxDictionary, active: &[usize]) -> Self {
        let pick = |v: &[f64]| active.iter().map(|&j| v[j]).collect::<Vec<f64>>();
        Self {
            eps: pick(dict.atom_error_bounds()),
            approx_norms: pick(dict.approx_atom_norms()),
            exact_norms: pick(dict.exact_atom_norms()),
        }
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn restrict(&mut self, keep: &[bool]) {
        crate::solver::retain_mask(&mut self.eps, keep);
        crate::solver::retain_mask(&mut self.approx_norms, keep);
        crate::solver::retain_mask(&mut self.exact_norms, keep);
    }
}

/// Result of one screening pass over the preserved set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenOutcome {
    /// `keep[k]` for the atom `active[k]`; a test value `≥ 1` (or NaN) keeps the atom.
    pub keep: Vec<bool>,
    pub test_values: Vec<f64>,
    pub preserved: Vec<usize>,
}

/// Test every atom of `active` against `sphere` and return the new preserved set.
///
/// `center_correlations` are `ã_jᵀc` for the atoms of `active`; when absent
/// they are computed here with one restricted adjoint product.
pub fn screen(
    dict: &dyn Dictionary,
    active: &[usize],
    sphere: &SafeSphere,
    bounds: &AtomBounds,
    use_stable: bool,
    center_correlations: Option<&[f64]>,
) -> Result<ScreenOutcome> {
    check_len(active.len(), bounds.len())?;
    let computed;
    let corr = match center_correlations {
        Some(c) => {
            check_len(active.len(), c.len())?;
            c
        }
        None => {
            let mut c = vec![0.0; active.len()];
            dict.adjoint_restricted(active, &sphere.center, &mut c);
            computed = c;
            &computed
        }
    };
    let test_values: Vec<f64> = if use_stable {
        let c_norm = norm2(&sphere.center);
        corr.iter()
            .enumerate()
            .map(|(k, &g)| zone_bound(g, bounds.eps[k], c_norm, sphere.radius, bounds.exact_norms[k]))
            .collect()
    } else {
        corr.iter()
            .zip(&bounds.exact_norms)
            .map(|(&g, &a)| sphere_bound(g, a, sphere.radius))
            .collect()
    };
    let keep: Vec<bool> = test_values.iter().map(|t| !(*t < 1.0)).collect();
    let preserved = active.iter().zip(&keep).filter(|(_, k)| **k).map(|(j, _)| *j).collect();
    Ok(ScreenOutcome { keep, test_values, preserved })
}
