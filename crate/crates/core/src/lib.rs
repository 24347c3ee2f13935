//! Safe and stable screening for the Lasso, and the FastL1 multi-dictionary solver.
//!
//! The crate solves
//!
//! ```text
//!     min_x  ½‖y − A x‖² + λ‖x‖₁
//! ```
//!
//! with proximal gradient iterations (ISTA / FISTA) combined with dynamic safe
//! screening. FastL1 iterates with cheap sum-of-Kronecker approximations of `A`
//! and uses *stable* screening tests, which stay safe for the original problem
//! while only touching the approximate atoms plus per-atom error bounds.
//!
//! Everything here is `no_std` + `alloc`. File formats, timing and the CLI live
//! in the `fastl1-bench` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(t < 1.0)` keeps NaN test values, i.e. never screens on them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dictionary;
pub mod fastl1;
pub mod flops;
pub mod linalg;
pub mod screening;
pub mod solver;

pub use dictionary::{
    build_sukro_sequence, build_sukro_sequence_with_shape, sukro_approximations, synthesize_scenario,
    synthesize_scenario_with_shape, ApproxDictionary, ApproxSequence, DenseDictionary, Dictionary,
    Scenario, SukroDictionary, SukroShape,
};
pub use fastl1::{
    fastl1_solve, gap_ratio, lookahead_count, plain_solve, screened_solve, switch_dictionary,
    IterationRecord, NoClock, RunOutcome, RunStatus, Stopwatch, SwitchConfig,
};
pub use flops::{FlopLedger, FlopModel};
pub use screening::{Rule, SafeSphere};
pub use solver::{LassoProblem, SolverKind};

use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
