//! Tidy CSV files for plotting, derived from trace rows.
//!
//! | file | columns |
//! |------|---------|
//! | `gap.csv` | run_id, variant, lambda_ratio, trial, iter, wall_ms, gap |
//! | `flops.csv` | run_id, variant, lambda_ratio, trial, iter, flops_cum |
//! | `active.csv` | run_id, variant, lambda_ratio, trial, iter, dict_index, active_size |
//! | `bands.csv` | variant, lambda_ratio, metric, runs, p25, median, p75 |
//!
//! The first three have one row per trace row. `bands.csv` holds, per variant
//! and `λ`, the quartiles over trials of the final flops (`flops_ratio`) and
//! wall time (`time_ratio`) normalized by the plain run of the same trial.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fastl1_core::fastl1::Variant;
use serde::Serialize;

use crate::stats::Band;
use crate::sweep::{write_csv, Tabular, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub run_id: u64,
    pub variant: String,
    pub lambda_ratio: f64,
    pub trial: u64,
    pub iter: u64,
    pub wall_ms: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlopsRow {
    pub run_id: u64,
    pub variant: String,
    pub lambda_ratio: f64,
    pub trial: u64,
    pub iter: u64,
    pub flops_cum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveRow {
    pub run_id: u64,
    pub variant: String,
    pub lambda_ratio: f64,
    pub trial: u64,
    pub iter: u64,
    pub dict_index: u64,
    pub active_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub variant: String,
    pub lambda_ratio: f64,
    pub metric: String,
    pub runs: u64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

impl Tabular for GapRow {
    const HEADER: &'static [&'static str] = &["run_id", "variant", "lambda_ratio", "trial", "iter", "wall_ms", "gap"];
}

impl Tabular for FlopsRow {
    const HEADER: &'static [&'static str] = &["run_id", "variant", "lambda_ratio", "trial", "iter", "flops_cum"];
}

impl Tabular for ActiveRow {
    const HEADER: &'static [&'static str] =
        &["run_id", "variant", "lambda_ratio", "trial", "iter", "dict_index", "active_size"];
}

impl Tabular for BandRow {
    const HEADER: &'static [&'static str] = &["variant", "lambda_ratio", "metric", "runs", "p25", "median", "p75"];
}

#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub gap: Vec<GapRow>,
    pub flops: Vec<FlopsRow>,
    pub active: Vec<ActiveRow>,
    pub bands: Vec<BandRow>,
}

pub fn plot_data(traces: &[TraceRow]) -> PlotData {
    let mut out = PlotData::default();
    for r in traces {
        out.gap.push(GapRow {
            run_id: r.run_id,
            variant: r.variant.clone(),
            lambda_ratio: r.lambda_ratio,
            trial: r.trial,
            iter: r.iter,
            wall_ms: r.wall_ms,
            gap: r.gap,
        });
        out.flops.push(FlopsRow {
            run_id: r.run_id,
            variant: r.variant.clone(),
            lambda_ratio: r.lambda_ratio,
            trial: r.trial,
            iter: r.iter,
            flops_cum: r.flops_cum,
        });
        out.active.push(ActiveRow {
            run_id: r.run_id,
            variant: r.variant.clone(),
            lambda_ratio: r.lambda_ratio,
            trial: r.trial,
            iter: r.iter,
            dict_index: r.dict_index,
            active_size: r.active_size,
        });
    }
    out.bands = bands(traces);
    out
}

/// Final `(flops, wall_ms)` per `(variant, λ bits, trial)`, keeping the last row of each run.
fn finals(traces: &[TraceRow]) -> BTreeMap<(String, u64, u64), (f64, f64)> {
    let mut m = BTreeMap::new();
    for r in traces {
        m.insert((r.variant.clone(), r.lambda_ratio.to_bits(), r.trial), (r.flops_cum as f64, r.wall_ms));
    }
    m
}

fn bands(traces: &[TraceRow]) -> Vec<BandRow> {
    let fin = finals(traces);
    let plain = Variant::Plain.as_str();
    let mut lambdas: Vec<u64> = Vec::new();
    for r in traces {
        if !lambdas.contains(&r.lambda_ratio.to_bits()) {
            lambdas.push(r.lambda_ratio.to_bits());
        }
    }
    let mut rows = Vec::new();
    for variant in Variant::ALL.map(Variant::as_str) {
        for &lb in &lambdas {
            let mut flops = Vec::new();
            let mut time = Vec::new();
            for ((v, l, trial), (f, t)) in &fin {
                if v != variant || *l != lb {
                    continue;
                }
                if let Some((fp, tp)) = fin.get(&(plain.to_owned(), lb, *trial)) {
                    flops.push(f / fp);
                    time.push(t / tp);
                }
            }
            if flops.is_empty() {
                continue;
            }
            for (metric, values) in [("flops_ratio", &flops), ("time_ratio", &time)] {
                let b = Band::of(values);
                rows.push(BandRow {
                    variant: variant.to_owned(),
                    lambda_ratio: f64::from_bits(lb),
                    metric: metric.to_owned(),
                    runs: values.len() as u64,
                    p25: b.p25,
                    median: b.median,
                    p75: b.p75,
                });
            }
        }
    }
    rows
}

pub fn emit_plot_data(traces: &[TraceRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let data = plot_data(traces);
    write_csv(&dir.join("gap.csv"), &data.gap)?;
    write_csv(&dir.join("flops.csv"), &data.flops)?;
    write_csv(&dir.join("active.csv"), &data.active)?;
    write_csv(&dir.join("bands.csv"), &data.bands)?;
    Ok(())
}
