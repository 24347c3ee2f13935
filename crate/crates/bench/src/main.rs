use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fastl1_bench::sweep::{build_sequence, read_csv, run_id, solve_one, trace_rows, write_csv};
use fastl1_bench::{emit_plot_data, io, lambda_grid, run_sweep, ConfigError, ExperimentConfig, TraceRow};
use fastl1_core::fastl1::Variant;
use fastl1_core::screening::lambda_max;
use fastl1_core::{Dictionary, Rule, Scenario, SolverKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "fastl1", version, about = "Lasso with stable screening and approximate dictionaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic problem (dictionary, signal, ground truth) to disk
    Gen {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Solve one instance with one variant
    Solve {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value = "fastl1")]
        variant: Variant,
        /// Dictionary file (.bin or CSV) instead of a synthetic one
        #[arg(long, requires = "signal")]
        dict: Option<PathBuf>,
        /// Signal file, one value per line
        #[arg(long, requires = "dict")]
        signal: Option<PathBuf>,
    },
    /// Run every variant over the λ grid and all trials
    Sweep {
        #[command(flatten)]
        settings: Settings,
    },
    /// Turn a trace.csv into plot-ready tables
    Plotdata {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

/// A JSON config file plus flag overrides.
#[derive(Args)]
struct Settings {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Kronecker factor shape n1,n2,k1,k2
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Comma-separated λ/λmax values
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda_grid")]
    lambda_ratio: Option<Vec<f64>>,
    /// Number of log-spaced ratios over [1e-2, 1]
    #[arg(long)]
    lambda_grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    rule: Option<Rule>,
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Relative complexities replacing the theoretical ones
    #[arg(long, value_delimiter = ',')]
    rc: Option<Vec<f64>>,
    /// Bernoulli activation probability of the ground truth
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    screen_interval: Option<usize>,
    #[arg(long)]
    precompute_aty: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl Settings {
    fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(n => n, k => k, scenario => scenario, tol => tol, gamma => gamma, solver => solver,
             rule => rule, ranks => ranks, p => bernoulli_p, trials => trials, seed => seed,
             out => out, screen_interval => screen_interval, max_iter => max_iter, jobs => jobs,
             lambda_ratio => lambda_ratios);
        if let Some(points) = self.lambda_grid {
            c.lambda_ratios = lambda_grid(points);
        }
        if let Some(s) = self.shape {
            let shape: [usize; 4] = s
                .try_into()
                .map_err(|_| ConfigError::Invalid("--shape takes exactly four values".into()))?;
            c.shape = Some(shape);
        }
        if self.rc.is_some() {
            c.rc_override = self.rc;
        }
        c.precompute_aty |= self.precompute_aty;
        c.validate()?;
        Ok(c)
    }
}

fn gen(cfg: &ExperimentConfig, trial: u64, format: Format) -> Result<()> {
    let p = fastl1_bench::generate_problem(cfg, trial)?;
    std::fs::create_dir_all(&cfg.out)?;
    match format {
        Format::Csv => io::write_dense_csv(&cfg.out.join("dict.csv"), &p.dict)?,
        Format::Bin => io::write_dense_bin(&cfg.out.join("dict.bin"), &p.dict)?,
    }
    io::write_vector(&cfg.out.join("y.csv"), &p.y)?;
    io::write_vector(&cfg.out.join("x_true.csv"), &p.x_true)?;
    println!("wrote {}x{} problem to {}", p.dict.nrows(), p.dict.ncols(), cfg.out.display());
    Ok(())
}

fn solve(cfg: &ExperimentConfig, trial: u64, variant: Variant, files: Option<(&Path, &Path)>) -> Result<bool> {
    let (a, y) = match files {
        Some((d, s)) => {
            let a = io::read_dictionary(d)?;
            let y = io::read_vector(s)?;
            if a.nrows() != cfg.n || a.ncols() != cfg.k {
                return Err(ConfigError::Invalid(format!(
                    "dictionary is {}x{} but the config says {}x{}",
                    a.nrows(),
                    a.ncols(),
                    cfg.n,
                    cfg.k
                ))
                .into());
            }
            (a, y)
        }
        None => {
            let p = fastl1_bench::generate_problem(cfg, trial)?;
            (Arc::try_unwrap(p.dict).unwrap_or_else(|a| (*a).clone()), p.y)
        }
    };
    let seq = build_sequence(cfg, Arc::new(a))?;
    let ratio = cfg.lambda_ratios[0];
    let lambda = ratio * lambda_max(seq.exact().as_ref(), &y)?;
    let out = solve_one(&seq, variant, &y, lambda, &cfg.switch_config())?;
    std::fs::create_dir_all(&cfg.out)?;
    let rows = trace_rows(&out, run_id(0, trial, 1, variant), trial, ratio, variant);
    write_csv(&cfg.out.join("trace.csv"), &rows)?;
    io::write_vector(&cfg.out.join("x.csv"), &out.x)?;
    println!(
        "{variant}: {:?} after {} iterations, gap {:.3e}, {} flops, {:.1} ms, dictionaries {:?}",
        out.status,
        out.iterations(),
        out.final_gap,
        out.ledger.total,
        out.wall_ms(),
        out.dict_trajectory()
    );
    Ok(out.converged())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen { settings, trial, format } => {
            gen(&settings.resolve()?, trial, format)?;
            Ok(0)
        }
        Command::Solve { settings, trial, variant, dict, signal } => {
            let cfg = settings.resolve()?;
            let files = dict.as_deref().zip(signal.as_deref());
            let ok = solve(&cfg, trial, variant, files)?;
            Ok(if ok { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Sweep { settings } => {
            let cfg = settings.resolve()?;
            let res = run_sweep(&cfg)?;
            res.write(&cfg.out)?;
            for s in &res.summary {
                println!(
                    "lambda {:.4}: F_A/F_N {:.3}  F_A~/F_N {:.3}  T_A/T_N {:.3}  T_A~/T_N {:.3}{}",
                    s.lambda_ratio,
                    s.flops_ratio_a_median,
                    s.flops_ratio_at_median,
                    s.time_ratio_a_median,
                    s.time_ratio_at_median,
                    if s.capped > 0 { format!("  ({} capped)", s.capped) } else { String::new() }
                );
            }
            Ok(if res.any_capped() { EXIT_NOT_CONVERGED } else { 0 })
        }
        Command::Plotdata { trace, out } => {
            let rows: Vec<TraceRow> = read_csv(&trace).with_context(|| format!("reading {}", trace.display()))?;
            emit_plot_data(&rows, &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
