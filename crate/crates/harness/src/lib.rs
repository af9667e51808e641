//! Driver for `mhd1d-core`: configuration files, run directories,
//! parameter sweeps, manufactured-solution convergence studies and the
//! acceptance suite.

// Comparisons such as `!(x > 0.0)` are written to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod format;
pub mod mms;
pub mod run;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use config::{ConfigError, MmsConfig, RunConfig, SweepConfig, TargetMode};
pub use error::HarnessError;
pub use run::{run_simulation, simulate, RunOutcome, RunSummary};
pub use sweep::run_sweep;

/// Environment variable that overrides `output.directory`.
pub const OUTPUT_ENV: &str = "MHD1D_OUT";
