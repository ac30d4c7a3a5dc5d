//! Experiment runner and verification suite for the resolvent toolkit.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod suite;

pub use config::{ConfigFile, ExperimentId, Params};
pub use error::{CliError, Result};
pub use experiments::{criteria_of, run_experiment, RunContext};
pub use report::Report;

/// Sizes the global worker pool from `RESOLVENT_LAB_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("RESOLVENT_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "RESOLVENT_LAB_THREADS = '{raw}' is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
