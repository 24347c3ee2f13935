//! The FastL1 driver: proximal iterations on a sequence of increasingly
//! accurate dictionaries, stable dynamic screening, and the switching rule.
//!
//! One iteration at evaluation point `v` (the iterate for ISTA, the
//! extrapolated point for FISTA):
//!
//! 1. `ρ = y − Ã_𝒜 v`, `g = Ã_𝒜ᵀ ρ`;
//! 2. dual points from `ρ`; on the exact dictionary, stop once the gap is below tolerance;
//! 3. proximal step;
//! 4. screen with the sphere built at `v`, then drop the screened coordinates;
//! 5. gap ratio, look-ahead count, and possibly a switch to a finer dictionary.
//!
//! The same loop with a one-element sequence is the conventional screened
//! solver, and with screening disabled it is the plain solver.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dictionary::{ApproxDictionary, ApproxSequence, Dictionary};
use crate::flops::{FlopLedger, FlopModel};
use crate::linalg::{nnz, norm1, norm2, norm2_sq, norm_inf};
use crate::screening::{
    build_sphere, dual_point_dynamic, screen, stable_max, AtomBounds, DualPoints, Rule, SafeSphere,
    SphereInputs,
};
use crate::solver::{dual_value, lipschitz_bound_warm, retain_mask, Gap, LassoProblem, ProxState, SolverKind};
use crate::{Error, Result};

/// Gap column value for iterations that did not evaluate the exact gap.
pub const NO_GAP: f64 = -1.0;
/// Gap-ratio denominators at or below this count as saturated.
pub const SATURATED_GAP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchConfig {
    /// Γ: move to the next dictionary once `γ_t ≤ Γ`.
    pub gamma_threshold: f64,
    /// Screen (and evaluate the switching rule) every this many iterations.
    pub screening_interval: usize,
    /// Target duality gap of the exact problem.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Use the exact `Aᵀy` in the Stable Dynamic test.
    pub precompute_aty: bool,
    pub solver: SolverKind,
    pub rule: Rule,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            gamma_threshold: 0.5,
            screening_interval: 1,
            tolerance: 1e-6,
            max_iter: 1_000_000,
            precompute_aty: false,
            solver: SolverKind::Fista,
            rule: Rule::StableGap,
        }
    }
}

impl SwitchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.gamma_threshold > 0.0 && self.gamma_threshold < 1.0) {
            return bad("gamma threshold must lie in (0, 1)");
        }
        if self.screening_interval == 0 {
            return bad("screening interval must be positive");
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return bad("tolerance must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }
}

/// Which solver a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Plain,
    Screened,
    FastL1,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Plain, Variant::Screened, Variant::FastL1];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Screened => "screened",
            Variant::FastL1 => "fastl1",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown variant '{s}'")))
    }
}

/// Why the dictionary index changed after an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Stay,
    /// `γ_t ≤ Γ`: next dictionary.
    Convergence,
    /// `K_t ≤ RC·K`: straight to the exact dictionary.
    Speed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Dictionary used by this iteration.
    pub dict_index: usize,
    /// `|𝒜_t|` at the start of the iteration.
    pub active_size: usize,
    /// `‖v‖₀` of the evaluation point.
    pub nnz: usize,
    /// Gap of the screened problem on the exact dictionary, or [`NO_GAP`]
    /// before it is reached. On a `certified` row, the gap over all `K` atoms.
    pub gap: f64,
    pub gamma: f64,
    pub lookahead: usize,
    pub transition: Transition,
    /// The row paid for a full-dictionary gap check
    /// ([`FlopModel::certify`](crate::flops::FlopModel::certify)).
    pub certified: bool,
    pub flops_iter: u64,
    pub flops_cum: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Full-length solution, zero on screened atoms. On `MaxIter` this is the last evaluation point.
    pub x: Vec<f64>,
    pub status: RunStatus,
    pub final_gap: f64,
    /// Gaps that came out below `-1e-10` before clamping.
    pub suspicious_gaps: usize,
    pub trace: Vec<IterationRecord>,
    pub ledger: FlopLedger,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn wall_ms(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.wall_ms)
    }

    /// Distinct dictionary indices in visiting order.
    pub fn dict_trajectory(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.trace {
            if out.last() != Some(&r.dict_index) {
                out.push(r.dict_index);
            }
        }
        out
    }
}

/// Milliseconds since the caller started the clock.
pub trait Stopwatch {
    fn elapsed_ms(&self) -> f64;
}

/// Always reports zero; for `no_std` use and deterministic tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Stopwatch for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// Snapshot of one screening pass, handed to a [`ScreenObserver`].
#[derive(Debug)]
pub struct ScreenEvent<'a> {
    pub iter: usize,
    pub dict_index: usize,
    pub rule: Rule,
    pub sphere: &'a SafeSphere,
    pub before: &'a [usize],
    pub after: &'a [usize],
    pub test_values: &'a [f64],
    pub lookahead: usize,
    pub gamma: f64,
}

pub trait ScreenObserver {
    fn on_screen(&mut self, event: &ScreenEvent<'_>);
}

impl ScreenObserver for () {
    fn on_screen(&mut self, _: &ScreenEvent<'_>) {}
}

/// `γ_t = G(x, θ̃ | Ã) / G(x, θ' | Ã)`, clamped to `[0, 1]`; 0 if the denominator vanishes.
pub fn gap_ratio(primal: f64, dual: &DualPoints, y: &[f64], lambda: f64) -> f64 {
    let num = primal - dual_value(&dual.theta_tilde, y, lambda);
    let den = primal - dual_value(&dual.theta_prime, y, lambda);
    if den <= SATURATED_GAP {
        return 0.0;
    }
    (num / den).clamp(0.0, 1.0)
}

/// `K_t = |{j : |ã_jᵀc| + R‖ã_j‖ ≥ 1}|`, from the inner products of the stable test.
pub fn lookahead_count(center_correlations: &[f64], approx_norms: &[f64], radius: f64) -> usize {
    center_correlations
        .iter()
        .zip(approx_norms)
        .filter(|(g, a)| !(g.abs() + radius * **a < 1.0))
        .count()
}

fn decide_switch(
    i: usize,
    last: usize,
    gamma: f64,
    gamma_threshold: f64,
    lookahead: usize,
    rc: f64,
    k: usize,
) -> (usize, Transition) {
    if i >= last {
        (last, Transition::Stay)
    } else if lookahead as f64 <= rc * k as f64 {
        (last, Transition::Speed)
    } else if gamma <= gamma_threshold {
        (i + 1, Transition::Convergence)
    } else {
        (i, Transition::Stay)
    }
}

/// Next dictionary index: `I` if `K_t ≤ RC_i·K`, else `i+1` if `γ_t ≤ Γ`, else `i`.
pub fn switch_dictionary(
    i: usize,
    last: usize,
    gamma: f64,
    gamma_threshold: f64,
    lookahead: usize,
    rc: f64,
    k: usize,
) -> usize {
    decide_switch(i, last, gamma, gamma_threshold, lookahead, rc, k).0
}

/// Proximal iterations on `a` without screening.
pub fn plain_solve(
    a: &ApproxDictionary,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
    clock: &dyn Stopwatch,
) -> Result<RunOutcome> {
    run(&[a], Variant::Plain, y, lambda, cfg, clock, &mut ())
}

/// Proximal iterations on `a` with the conventional counterpart of `cfg.rule`.
pub fn screened_solve(
    a: &ApproxDictionary,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
    clock: &dyn Stopwatch,
) -> Result<RunOutcome> {
    run(&[a], Variant::Screened, y, lambda, cfg, clock, &mut ())
}

/// FastL1 over the whole sequence.
pub fn fastl1_solve(
    seq: &ApproxSequence,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
    clock: &dyn Stopwatch,
) -> Result<RunOutcome> {
    solve_observed(Variant::FastL1, seq, y, lambda, cfg, clock, &mut ())
}

/// Run one variant; plain and screened use the exact (last) dictionary of `seq`.
pub fn solve_observed(
    variant: Variant,
    seq: &ApproxSequence,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
    clock: &dyn Stopwatch,
    observer: &mut dyn ScreenObserver,
) -> Result<RunOutcome> {
    match variant {
        Variant::FastL1 => {
            let dicts: Vec<&ApproxDictionary> = seq.iter().collect();
            run(&dicts, variant, y, lambda, cfg, clock, observer)
        }
        _ => run(&[seq.get(seq.last_index())], variant, y, lambda, cfg, clock, observer),
    }
}

fn scatter(k: usize, active: &[usize], values: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; k];
    for (&j, &v) in active.iter().zip(values) {
        x[j] = v;
    }
    x
}

/// Lipschitz bound on `dict` restricted to `active`, warm-started when possible.
fn restricted_lipschitz(
    dict: &ApproxDictionary,
    active: &[usize],
    warm: &mut Option<Vec<f64>>,
    fallback: f64,
) -> f64 {
    if active.is_empty() {
        return fallback;
    }
    if active.len() == dict.ncols() {
        *warm = None;
        return dict.lipschitz();
    }
    let start = warm.as_deref().filter(|v| v.len() == active.len());
    let (l, v) = lipschitz_bound_warm(dict, Some(active), start);
    *warm = Some(v);
    if l > 0.0 && l.is_finite() {
        l
    } else {
        fallback
    }
}

/// Gap over all atoms of `dict` at `scale · ρ`, where `scale` was computed
/// from the active atoms only.
fn full_gap(
    dict: &ApproxDictionary,
    active: &[usize],
    y: &[f64],
    residual: &[f64],
    lambda: f64,
    primal: f64,
    scale: f64,
) -> Gap {
    let mut in_active = vec![false; dict.ncols()];
    active.iter().for_each(|&j| in_active[j] = true);
    let screened: Vec<usize> = (0..dict.ncols()).filter(|&j| !in_active[j]).collect();
    let mut corr = vec![0.0; screened.len()];
    dict.adjoint_restricted(&screened, residual, &mut corr);
    let scale = scale.min(1.0 / norm_inf(&corr));
    let theta: Vec<f64> = residual.iter().map(|v| v * scale).collect();
    Gap::from_objectives(primal, dual_value(&theta, y, lambda))
}

fn run(
    dicts: &[&ApproxDictionary],
    variant: Variant,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
    clock: &dyn Stopwatch,
    observer: &mut dyn ScreenObserver,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let last = dicts.len() - 1;
    let (n, k) = (dicts[0].nrows(), dicts[0].ncols());
    LassoProblem::new(dicts[0], y, lambda)?;
    let model = FlopModel::new(n, k);
    let mut ledger = FlopLedger::new(model);
    let screening = variant != Variant::Plain;
    let y_norm = norm2(y);

    let mut i = 0;
    let mut active: Vec<usize> = (0..k).collect();
    let mut bounds = AtomBounds::gather(dicts[i], &active);
    let mut lipschitz = dicts[i].lipschitz();
    let mut lip_warm: Option<Vec<f64>> = None;
    let mut lip_size = k;
    let mut prox = ProxState::new(cfg.solver, vec![0.0; k], lipschitz);
    // Ãᵀy of the current dictionary, over all atoms
    let mut signal: Option<Vec<f64>> = None;
    let mut exact_aty: Option<Vec<f64>> = None;

    let mut residual = vec![0.0; n];
    let mut corr = vec![0.0; k];
    let mut trace = Vec::new();
    let mut gamma = 1.0;
    let mut final_gap = f64::INFINITY;
    let mut suspicious = 0;
    // restricted gap below which the full problem is checked
    let mut check_below = cfg.tolerance;

    for t in 0..cfg.max_iter {
        let dict = dicts[i];
        let exact_phase = i == last;
        let size = active.len();
        let v_nnz = nnz(prox.eval_point());
        corr.truncate(size);
        prox.evaluate(dict, &active, y, &mut residual, &mut corr);
        let v_l1 = norm1(prox.eval_point());
        let primal = 0.5 * norm2_sq(&residual) + lambda * v_l1;
        let dual = dual_point_dynamic(dict, &active, &residual, &corr, &bounds.eps, y, lambda)?;

        let flops = match variant {
            Variant::Plain => model.plain(v_nnz),
            _ if exact_phase => model.screened(size, v_nnz),
            _ => model.approximate(dict.complexity_cost(), size, v_nnz),
        };
        let mut record = IterationRecord {
            iter: t,
            dict_index: i,
            active_size: size,
            nnz: v_nnz,
            gap: NO_GAP,
            gamma,
            lookahead: size,
            transition: Transition::Stay,
            certified: false,
            flops_iter: flops,
            flops_cum: ledger.charge(flops),
            wall_ms: 0.0,
        };

        if exact_phase {
            // certificate point ρ / max(λ, ‖Aᵀρ‖∞), over the active atoms for now
            let scale = 1.0 / lambda.max(norm_inf(&corr));
            let theta: Vec<f64> = residual.iter().map(|v| v * scale).collect();
            let g = Gap::from_objectives(primal, dual_value(&theta, y, lambda));
            suspicious += usize::from(g.suspicious);
            record.gap = g.value;
            final_gap = g.value;
            if g.value <= check_below && size < k {
                // screened atoms can still cap the dual scaling of the full problem
                let full = full_gap(dict, &active, y, &residual, lambda, primal, scale);
                suspicious += usize::from(full.suspicious);
                record.certified = true;
                record.flops_iter += model.certify(size);
                record.flops_cum = ledger.charge(model.certify(size));
                record.gap = full.value;
                final_gap = full.value;
                if full.value > cfg.tolerance {
                    // the full gap shrinks roughly like the square root of the restricted one
                    let r = cfg.tolerance / full.value;
                    check_below = g.value * r * r;
                }
            }
            if final_gap <= cfg.tolerance {
                record.wall_ms = clock.elapsed_ms();
                trace.push(record);
                return Ok(RunOutcome {
                    x: scatter(k, &active, prox.eval_point()),
                    status: RunStatus::Converged,
                    final_gap,
                    suspicious_gaps: suspicious,
                    trace,
                    ledger,
                });
            }
        }

        prox.advance(&corr, lambda);

        if screening && t % cfg.screening_interval == 0 {
            let rule = if exact_phase { cfg.rule.conventional() } else { cfg.rule.stable() };
            gamma = if exact_phase { 1.0 } else { gap_ratio(primal, &dual, y, lambda) };

            let centered_at_signal = matches!(rule.conventional(), Rule::Static | Rule::Dynamic);
            if centered_at_signal && signal.is_none() {
                signal = Some(dict.adjoint_matvec(y)?);
            }
            let lambda_max = match (&signal, rule) {
                (Some(s), Rule::StableStatic) => stable_max(s, dict.atom_error_bounds(), y_norm),
                (Some(s), _) => norm_inf(s),
                (None, _) => 0.0,
            };
            let inputs = SphereInputs {
                y,
                lambda,
                lambda_max,
                dual: &dual,
                primal,
                residual_norm: norm2(&residual),
                x_l1: v_l1,
                operator_error: dict.operator_error_bound(),
            };
            let sphere = build_sphere(rule, &inputs);

            let approx_corr: Vec<f64> = match (rule, &signal) {
                (Rule::Gap, _) => dual.tilde_correlations(),
                (Rule::StableGap, _) => dual.prime_correlations(),
                (_, Some(s)) => active.iter().map(|&j| s[j] / lambda).collect(),
                (_, None) => unreachable!("signal correlations computed above"),
            };
            let out = if rule == Rule::StableDynamic && cfg.precompute_aty {
                let aty = exact_aty.get_or_insert_with(|| {
                    let a = dicts[last];
                    let mut v = vec![0.0; k];
                    a.apply_adjoint_into(y, &mut v);
                    v
                });
                let exact_corr: Vec<f64> = active.iter().map(|&j| aty[j] / lambda).collect();
                screen(dict, &active, &sphere, &bounds, false, Some(&exact_corr))?
            } else {
                screen(dict, &active, &sphere, &bounds, rule.is_stable(), Some(&approx_corr))?
            };
            let lookahead = lookahead_count(&approx_corr, &bounds.approx_norms, sphere.radius);
            observer.on_screen(&ScreenEvent {
                iter: t,
                dict_index: i,
                rule,
                sphere: &sphere,
                before: &active,
                after: &out.preserved,
                test_values: &out.test_values,
                lookahead,
                gamma,
            });

            if out.preserved.len() < size {
                prox.restrict(&out.keep);
                bounds.restrict(&out.keep);
                if let Some(w) = lip_warm.as_mut() {
                    retain_mask(w, &out.keep);
                }
                active = out.preserved;
                if 2 * active.len() <= lip_size && !active.is_empty() {
                    lipschitz = restricted_lipschitz(dict, &active, &mut lip_warm, lipschitz);
                    lip_size = active.len();
                    prox.set_lipschitz(lipschitz);
                }
            }
            record.gamma = gamma;
            record.lookahead = lookahead;

            if !exact_phase {
                let (j, transition) = decide_switch(
                    i,
                    last,
                    gamma,
                    cfg.gamma_threshold,
                    lookahead,
                    dict.relative_complexity(),
                    k,
                );
                if j != i {
                    i = j;
                    record.transition = transition;
                    bounds = AtomBounds::gather(dicts[i], &active);
                    signal = None;
                    lipschitz = restricted_lipschitz(dicts[i], &active, &mut lip_warm, dicts[i].lipschitz());
                    lip_size = active.len().max(1);
                    prox.set_lipschitz(lipschitz);
                    prox.restart();
                    if i == last {
                        gamma = 1.0;
                    }
                }
            }
        }

        record.wall_ms = clock.elapsed_ms();
        trace.push(record);
    }

    Ok(RunOutcome {
        x: scatter(k, &active, prox.eval_point()),
        status: RunStatus::MaxIter,
        final_gap,
        suspicious_gaps: suspicious,
        trace,
        ledger,
    })
}
