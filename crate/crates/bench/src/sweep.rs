//! The experiment grid: every `(λ, trial)` pair runs the plain solver, the
//! conventionally screened solver and FastL1 on the same instance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use anyhow::{Context, Result};
use fastl1_core::fastl1::{solve_observed, Variant};
use fastl1_core::screening::lambda_max;
use fastl1_core::{
    sukro_approximations, ApproxSequence, DenseDictionary, RunOutcome, Stopwatch, SwitchConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::problem::{build_dictionary, draw_signal};
use crate::stats::Band;

/// Monotonic wall clock started at construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Stopwatch for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// One solver iteration. `wall_ms` is the only non-deterministic column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: u64,
    pub trial: u64,
    pub lambda_ratio: f64,
    pub iter: u64,
    pub dict_index: u64,
    pub active_size: u64,
    /// Exact-problem duality gap; `-1` while an approximation is in use.
    pub gap: f64,
    pub gamma: f64,
    pub flops_cum: u64,
    pub wall_ms: f64,
    pub variant: String,
    pub nnz: u64,
    /// The iteration also paid for a gap check over all `K` atoms.
    pub certified: bool,
}

/// One `(λ, trial)` pair: the three variants side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub lambda_ratio: f64,
    pub trial: u64,
    pub iters_n: u64,
    pub iters_a: u64,
    pub iters_at: u64,
    pub flops_n: u64,
    pub flops_a: u64,
    pub flops_at: u64,
    pub time_n_ms: f64,
    pub time_a_ms: f64,
    pub time_at_ms: f64,
    pub flops_ratio_a: f64,
    pub flops_ratio_at: f64,
    pub time_ratio_a: f64,
    pub time_ratio_at: f64,
    /// Some variant stopped at the iteration cap without reaching the tolerance.
    pub capped: bool,
}

/// Percentiles across trials at one `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda_ratio: f64,
    pub trials: u64,
    pub capped: u64,
    pub flops_ratio_a_p25: f64,
    pub flops_ratio_a_median: f64,
    pub flops_ratio_a_p75: f64,
    pub flops_ratio_at_p25: f64,
    pub flops_ratio_at_median: f64,
    pub flops_ratio_at_p75: f64,
    pub time_ratio_a_p25: f64,
    pub time_ratio_a_median: f64,
    pub time_ratio_a_p75: f64,
    pub time_ratio_at_p25: f64,
    pub time_ratio_at_median: f64,
    pub time_ratio_at_p75: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub traces: Vec<TraceRow>,
    pub runs: Vec<RunSummary>,
    pub summary: Vec<LambdaSummary>,
    /// Time spent building the approximation sequence (not part of any run).
    pub build_ms: f64,
}

impl SweepResult {
    pub fn any_capped(&self) -> bool {
        self.runs.iter().any(|r| r.capped)
    }

    /// Writes `trace.csv`, `runs.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_csv(&dir.join("trace.csv"), &self.traces)?;
        write_csv(&dir.join("runs.csv"), &self.runs)?;
        write_csv(&dir.join("summary.csv"), &self.summary)?;
        Ok(())
    }
}

/// Rows with a fixed CSV column order.
pub trait Tabular: Serialize {
    const HEADER: &'static [&'static str];
}

impl Tabular for TraceRow {
    const HEADER: &'static [&'static str] = &[
        "run_id",
        "trial",
        "lambda_ratio",
        "iter",
        "dict_index",
        "active_size",
        "gap",
        "gamma",
        "flops_cum",
        "wall_ms",
        "variant",
        "nnz",
        "certified",
    ];
}

impl Tabular for RunSummary {
    const HEADER: &'static [&'static str] = &[
        "lambda_ratio",
        "trial",
        "iters_n",
        "iters_a",
        "iters_at",
        "flops_n",
        "flops_a",
        "flops_at",
        "time_n_ms",
        "time_a_ms",
        "time_at_ms",
        "flops_ratio_a",
        "flops_ratio_at",
        "time_ratio_a",
        "time_ratio_at",
        "capped",
    ];
}

impl Tabular for LambdaSummary {
    const HEADER: &'static [&'static str] = &[
        "lambda_ratio",
        "trials",
        "capped",
        "flops_ratio_a_p25",
        "flops_ratio_a_median",
        "flops_ratio_a_p75",
        "flops_ratio_at_p25",
        "flops_ratio_at_median",
        "flops_ratio_at_p75",
        "time_ratio_a_p25",
        "time_ratio_a_median",
        "time_ratio_a_p75",
        "time_ratio_at_p25",
        "time_ratio_at_median",
        "time_ratio_at_p75",
    ];
}

/// Writes the header even when `rows` is empty.
pub fn write_csv<T: Tabular>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Approximation sequence for `cfg`, with the RC override applied.
pub fn build_sequence(cfg: &ExperimentConfig, a: Arc<DenseDictionary>) -> Result<ApproxSequence> {
    let mut approx = sukro_approximations(&a, cfg.factor_shape()?, &cfg.ranks)?;
    if let Some(rc) = &cfg.rc_override {
        for (d, &r) in approx.iter_mut().zip(rc) {
            d.set_relative_complexity(r)?;
        }
    }
    Ok(ApproxSequence::new(approx, a)?)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let a = Arc::new(build_dictionary(cfg)?);
    let start = Instant::now();
    let seq = build_sequence(cfg, a)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!("approximations built in {build_ms:.0} ms");
    let traces = run_grid(cfg, &seq)?;
    let runs = summarize_runs(&traces, cfg.tol);
    let summary = summarize_lambdas(&runs);
    Ok(SweepResult { traces, runs, summary, build_ms })
}

/// Unique per `(λ index, trial, variant)`.
pub fn run_id(lambda_index: usize, trial: u64, trials: usize, variant: Variant) -> u64 {
    let v = Variant::ALL.iter().position(|&w| w == variant).unwrap_or(0) as u64;
    ((lambda_index as u64 * trials as u64) + trial) * Variant::ALL.len() as u64 + v
}

/// One solve timed by a fresh wall clock.
pub fn solve_one(
    seq: &ApproxSequence,
    variant: Variant,
    y: &[f64],
    lambda: f64,
    cfg: &SwitchConfig,
) -> Result<RunOutcome> {
    let clock = WallClock::start();
    Ok(solve_observed(variant, seq, y, lambda, cfg, &clock, &mut ())?)
}

pub fn trace_rows(out: &RunOutcome, run_id: u64, trial: u64, lambda_ratio: f64, variant: Variant) -> Vec<TraceRow> {
    out.trace
        .iter()
        .map(|r| TraceRow {
            run_id,
            trial,
            lambda_ratio,
            iter: r.iter as u64,
            dict_index: r.dict_index as u64,
            active_size: r.active_size as u64,
            gap: r.gap,
            gamma: r.gamma,
            flops_cum: r.flops_cum,
            wall_ms: r.wall_ms,
            variant: variant.as_str().to_owned(),
            nnz: r.nnz as u64,
            certified: r.certified,
        })
        .collect()
}

/// Every `(λ, trial)` pair on a pool of `cfg.jobs` workers; rows come back in grid order.
pub fn run_grid(cfg: &ExperimentConfig, seq: &ApproxSequence) -> Result<Vec<TraceRow>> {
    let tasks: Vec<(usize, u64)> = (0..cfg.lambda_ratios.len())
        .flat_map(|li| (0..cfg.trials as u64).map(move |t| (li, t)))
        .collect();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let scfg = cfg.switch_config();

    let work = |li: usize, trial: u64| -> Result<Vec<TraceRow>> {
        let a = seq.exact();
        let (y, _) = draw_signal(a, cfg.bernoulli_p, cfg.seed, trial);
        let ratio = cfg.lambda_ratios[li];
        let lambda = ratio * lambda_max(a.as_ref(), &y)?;
        let mut rows = Vec::new();
        for variant in Variant::ALL {
            let out = solve_one(seq, variant, &y, lambda, &scfg)?;
            if !out.converged() {
                log::warn!("{variant} hit the iteration cap at ratio {ratio}, trial {trial}");
            }
            let id = run_id(li, trial, cfg.trials, variant);
            rows.extend(trace_rows(&out, id, trial, ratio, variant));
        }
        log::debug!("ratio {ratio} trial {trial} done");
        Ok(rows)
    };

    let mut done: BTreeMap<usize, Vec<TraceRow>> = BTreeMap::new();
    std::thread::scope(|s| -> Result<()> {
        for _ in 0..cfg.jobs.min(tasks.len()) {
            let tx = tx.clone();
            let (next, tasks, work) = (&next, &tasks, &work);
            s.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(li, trial)) = tasks.get(idx) else { break };
                if tx.send((idx, work(li, trial))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (idx, rows) in rx {
            done.insert(idx, rows?);
        }
        Ok(())
    })?;
    Ok(done.into_values().flatten().collect())
}

fn final_row<'a>(rows: &[&'a TraceRow], variant: Variant) -> Option<&'a TraceRow> {
    rows.iter().rev().find(|r| r.variant == variant.as_str()).copied()
}

/// Per-pair summary computed from trace rows alone.
pub fn summarize_runs(traces: &[TraceRow], tol: f64) -> Vec<RunSummary> {
    let mut order: Vec<(u64, u64)> = Vec::new();
    let mut groups: BTreeMap<(u64, u64), Vec<&TraceRow>> = BTreeMap::new();
    for r in traces {
        let key = (r.lambda_ratio.to_bits(), r.trial);
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        }).push(r);
    }
    order
        .iter()
        .map(|key| {
            let rows = &groups[key];
            let pick = |v| final_row(rows, v);
            let (n, a, at) = (pick(Variant::Plain), pick(Variant::Screened), pick(Variant::FastL1));
            let iters = |r: Option<&TraceRow>| r.map_or(0, |r| r.iter + 1);
            let flops = |r: Option<&TraceRow>| r.map_or(0, |r| r.flops_cum);
            let time = |r: Option<&TraceRow>| r.map_or(0.0, |r| r.wall_ms);
            let converged = |r: Option<&TraceRow>| r.is_some_and(|r| r.gap >= 0.0 && r.gap <= tol);
            RunSummary {
                lambda_ratio: f64::from_bits(key.0),
                trial: key.1,
                iters_n: iters(n),
                iters_a: iters(a),
                iters_at: iters(at),
                flops_n: flops(n),
                flops_a: flops(a),
                flops_at: flops(at),
                time_n_ms: time(n),
                time_a_ms: time(a),
                time_at_ms: time(at),
                flops_ratio_a: flops(a) as f64 / flops(n) as f64,
                flops_ratio_at: flops(at) as f64 / flops(n) as f64,
                time_ratio_a: time(a) / time(n),
                time_ratio_at: time(at) / time(n),
                capped: ![n, a, at].into_iter().all(converged),
            }
        })
        .collect()
}

/// Medians and quartiles per `λ`, in grid order.
pub fn summarize_lambdas(runs: &[RunSummary]) -> Vec<LambdaSummary> {
    let mut order: Vec<u64> = Vec::new();
    let mut groups: BTreeMap<u64, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        let key = r.lambda_ratio.to_bits();
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        }).push(r);
    }
    order
        .iter()
        .map(|key| {
            let rows = &groups[key];
            let band = |f: fn(&RunSummary) -> f64| Band::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (fa, fat) = (band(|r| r.flops_ratio_a), band(|r| r.flops_ratio_at));
            let (ta, tat) = (band(|r| r.time_ratio_a), band(|r| r.time_ratio_at));
            LambdaSummary {
                lambda_ratio: f64::from_bits(*key),
                trials: rows.len() as u64,
                capped: rows.iter().filter(|r| r.capped).count() as u64,
                flops_ratio_a_p25: fa.p25,
                flops_ratio_a_median: fa.median,
                flops_ratio_a_p75: fa.p75,
                flops_ratio_at_p25: fat.p25,
                flops_ratio_at_median: fat.median,
                flops_ratio_at_p75: fat.p75,
                time_ratio_a_p25: ta.p25,
                time_ratio_a_median: ta.median,
                time_ratio_a_p75: ta.p75,
                time_ratio_at_p25: tat.p25,
                time_ratio_at_median: tat.median,
                time_ratio_at_p75: tat.p75,
            }
        })
        .collect()
}
