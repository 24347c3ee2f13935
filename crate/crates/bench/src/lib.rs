//! Synthetic experiments around the FastL1 solver: instance generation,
//! configuration, dictionary files, parameter sweeps and CSV output.

pub mod config;
pub mod io;
pub mod plot;
pub mod problem;
pub mod stats;
pub mod sweep;

pub use config::{lambda_grid, ConfigError, ExperimentConfig};
pub use plot::emit_plot_data;
pub use problem::{build_dictionary, draw_signal, generate_problem, Problem};
pub use sweep::{run_sweep, SweepResult, TraceRow, WallClock};
