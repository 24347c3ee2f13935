//! Proximal gradient iterations (ISTA / FISTA) and Lasso objectives.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dictionary::Dictionary;
use crate::linalg::{norm1, norm2_sq, power_iteration};
use crate::{check_len, Error, Result};

/// Safety factor applied to the power-iteration estimate of `‖A‖²`.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;
/// Gaps below this are treated as bugs rather than roundoff.
pub const GAP_ROUNDOFF: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Ista,
    Fista,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ista" => Ok(SolverKind::Ista),
            "fista" => Ok(SolverKind::Fista),
            other => Err(Error::InvalidArgument(alloc::format!("unknown solver '{other}'"))),
        }
    }
}

/// `min_x ½‖y − A x‖² + λ‖x‖₁`
#[derive(Clone, Copy)]
pub struct LassoProblem<'a> {
    pub dict: &'a dyn Dictionary,
    pub y: &'a [f64],
    pub lambda: f64,
}

impl<'a> LassoProblem<'a> {
    pub fn new(dict: &'a dyn Dictionary, y: &'a [f64], lambda: f64) -> Result<Self> {
        check_len(dict.nrows(), y.len())?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { dict, y, lambda })
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.y.len()];
        self.dict.apply_into(x, &mut r);
        for (ri, yi) in r.iter_mut().zip(self.y) {
            *ri = yi - *ri;
        }
        r
    }
}

#[inline]
pub fn soft_threshold(z: f64, u: f64) -> f64 {
    if z > u {
        z - u
    } else if z < -u {
        z + u
    } else {
        0.0
    }
}

/// `P(x) = ½‖A x − y‖² + λ‖x‖₁`
pub fn primal_value(x: &[f64], problem: &LassoProblem<'_>) -> f64 {
    0.5 * norm2_sq(&problem.residual(x)) + problem.lambda * norm1(x)
}

/// `D(θ) = ½‖y‖² − (λ²/2)‖θ − y/λ‖²`
pub fn dual_value(theta: &[f64], y: &[f64], lambda: f64) -> f64 {
    let d2: f64 = theta.iter().zip(y).map(|(t, yi)| (t - yi / lambda) * (t - yi / lambda)).sum();
    0.5 * norm2_sq(y) - 0.5 * lambda * lambda * d2
}

/// A duality gap clamped at zero; `suspicious` marks values below roundoff level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub value: f64,
    pub suspicious: bool,
}

impl Gap {
    pub fn from_objectives(primal: f64, dual: f64) -> Self {
        let g = primal - dual;
        Self { value: g.max(0.0), suspicious: g < GAP_ROUNDOFF }
    }
}

/// `G(x, θ) = P(x) − D(θ)`; `θ` must be dual feasible.
pub fn duality_gap(x: &[f64], theta: &[f64], problem: &LassoProblem<'_>) -> Gap {
    Gap::from_objectives(primal_value(x, problem), dual_value(theta, problem.y, problem.lambda))
}

/// `1.05 ×` a power-iteration estimate of `‖A[:, active]‖₂²`.
pub fn lipschitz_bound(dict: &dyn Dictionary, active: Option<&[usize]>) -> f64 {
    lipschitz_bound_warm(dict, active, None).0
}

/// As [`lipschitz_bound`], warm-started from a previous dominant right vector
/// (indexed like `active`). Returns the bound and the new dominant vector.
pub fn lipschitz_bound_warm(
    dict: &dyn Dictionary,
    active: Option<&[usize]>,
    start: Option<&[f64]>,
) -> (f64, Vec<f64>) {
    let all: Vec<usize>;
    let active = match active {
        Some(a) => a,
        None => {
            all = (0..dict.ncols()).collect();
            &all
        }
    };
    let mut tmp = vec![0.0; dict.nrows()];
    let (est, v) = power_iteration(
        active.len(),
        |v, out| {
            dict.apply_restricted(active, v, &mut tmp);
            dict.adjoint_restricted(active, &tmp, out);
        },
        start,
        200,
        // the safety factor absorbs the remaining error
        1e-6,
    );
    (LIPSCHITZ_SAFETY * est, v)
}

/// Iterate of a proximal gradient method over a (possibly restricted) set of atoms.
///
/// For FISTA `eval` is the extrapolated point; for ISTA it equals `x`.
#[derive(Debug, Clone)]
pub struct ProxState {
    kind: SolverKind,
    step: f64,
    x: Vec<f64>,
    eval: Vec<f64>,
    momentum: f64,
}

impl ProxState {
    pub fn new(kind: SolverKind, x0: Vec<f64>, lipschitz: f64) -> Self {
        debug_assert!(lipschitz > 0.0);
        Self { kind, step: 1.0 / lipschitz, eval: x0.clone(), x: x0, momentum: 1.0 }
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn set_lipschitz(&mut self, lipschitz: f64) {
        debug_assert!(lipschitz > 0.0);
        self.step = 1.0 / lipschitz;
    }

    /// Point at which the next gradient is evaluated.
    pub fn eval_point(&self) -> &[f64] {
        &self.eval
    }

    /// Last proximal output `x_t`.
    pub fn iterate(&self) -> &[f64] {
        &self.x
    }

    /// `residual = y − A[:,active] eval`, `corr = A[:,active]ᵀ residual`.
    pub fn evaluate(
        &self,
        dict: &dyn Dictionary,
        active: &[usize],
        y: &[f64],
        residual: &mut [f64],
        corr: &mut [f64],
    ) {
        dict.apply_restricted(active, &self.eval, residual);
        for (r, yi) in residual.iter_mut().zip(y) {
            *r = yi - *r;
        }
        dict.adjoint_restricted(active, residual, corr);
    }

    /// Proximal step from `eval` using `corr = Aᵀ(y − A eval)`, then momentum.
    pub fn advance(&mut self, corr: &[f64], lambda: f64) {
        let thresh = lambda * self.step;
        match self.kind {
            SolverKind::Ista => {
                for ((x, z), g) in self.x.iter_mut().zip(&self.eval).zip(corr) {
                    *x = soft_threshold(z + self.step * g, thresh);
                }
                self.eval.copy_from_slice(&self.x);
            }
            SolverKind::Fista => {
                let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * self.momentum * self.momentum));
                let beta = (self.momentum - 1.0) / t_next;
                for ((x, z), g) in self.x.iter_mut().zip(self.eval.iter_mut()).zip(corr) {
                    let new = soft_threshold(*z + self.step * g, thresh);
                    *z = new + beta * (new - *x);
                    *x = new;
                }
                self.momentum = t_next;
            }
        }
    }

    /// Drop the coordinates whose `keep` flag is false.
    pub fn restrict(&mut self, keep: &[bool]) {
        retain_mask(&mut self.x, keep);
        retain_mask(&mut self.eval, keep);
    }

    /// Forget momentum: the next evaluation point is the current iterate.
    pub fn restart(&mut self) {
        self.momentum = 1.0;
        self.eval.copy_from_slice(&self.x);
    }
}

pub(crate) fn retain_mask<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut it = keep.iter();
    v.retain(|_| *it.next().unwrap_or(&true));
}

/// Auxiliary state of a full-dictionary step: step size and FISTA momentum.
#[derive(Debug, Clone)]
pub struct SolverAux {
    pub lipschitz: f64,
    state: Option<ProxState>,
}

impl SolverAux {
    pub fn new(lipschitz: f64) -> Self {
        Self { lipschitz, state: None }
    }
}

/// Output of one proximal step; residual and correlations are at the point the
/// gradient was evaluated, for reuse by screening.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: Vec<f64>,
    pub eval_point: Vec<f64>,
    pub residual: Vec<f64>,
    pub correlations: Vec<f64>,
}

fn full_step(kind: SolverKind, x: &[f64], problem: &LassoProblem<'_>, aux: &mut SolverAux) -> Result<StepOutput> {
    let k = problem.dict.ncols();
    check_len(k, x.len())?;
    let fresh = match &aux.state {
        Some(s) => s.kind() != kind || s.iterate() != x,
        None => true,
    };
    if fresh {
        aux.state = Some(ProxState::new(kind, x.to_vec(), aux.lipschitz));
    }
    let state = aux.state.as_mut().expect("state initialised above");
    state.set_lipschitz(aux.lipschitz);
    let active: Vec<usize> = (0..k).collect();
    let mut residual = vec![0.0; problem.y.len()];
    let mut correlations = vec![0.0; k];
    state.evaluate(problem.dict, &active, problem.y, &mut residual, &mut correlations);
    let eval_point = state.eval_point().to_vec();
    state.advance(&correlations, problem.lambda);
    Ok(StepOutput { next: state.iterate().to_vec(), eval_point, residual, correlations })
}

/// `x_{t+1} = soft(x_t + Aᵀ(y − A x_t)/L, λ/L)` on the full dictionary.
pub fn ista_step(x: &[f64], problem: &LassoProblem<'_>, aux: &mut SolverAux) -> Result<StepOutput> {
    full_step(SolverKind::Ista, x, problem, aux)
}

/// One FISTA step; momentum lives in `aux` and continues while `x` is the
/// previous output of this function.
pub fn fista_step(x: &[f64], problem: &LassoProblem<'_>, aux: &mut SolverAux) -> Result<StepOutput> {
    full_step(SolverKind::Fista, x, problem, aux)
}
