//! Config-driven front end for the Rydberg-ion gate simulator.
//!
//! The binary (`rydgate`) exposes four subcommands:
//!
//! - `run <config.json> [--out DIR]` — execute an experiment definition,
//!   writing a trajectory or sweep CSV and a JSON summary.
//! - `preset <name> [--out DIR]` — run a checked-in figure preset.
//! - `list` — print every preset with a one-line description.
//! - `validate <config.json>` — schema and physics diagnostics, without
//!   running.
//!
//! Exit codes: 0 success, 2 invalid config, 3 numerical or I/O failure.
//! The output directory defaults to `rydgate-out/<name>` and can be
//! overridden by `--out` or the `RYDGATE_OUT` environment variable.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{validate, Diagnostics, ExperimentConfig};
pub use presets::{load_preset, preset_descriptions, preset_names};
pub use runner::{execute, RunError, RunOutcome, RunSummary};

use std::path::PathBuf;

/// Resolve the output directory: explicit flag, else `RYDGATE_OUT`, else
/// `rydgate-out/<run name>`.
pub fn output_dir(flag: Option<PathBuf>, run_name: &str) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Ok(dir) = std::env::var("RYDGATE_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir).join(run_name);
        }
    }
    PathBuf::from("rydgate-out").join(run_name)
}
