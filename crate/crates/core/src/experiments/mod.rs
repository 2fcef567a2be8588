//! Run configs, the single-run pipeline, regime sweeps, the discrete
//! algorithm runner and the acceptance suite, as used by the `tikflow` binary.

pub mod accept;
pub mod checks;
pub mod config;
mod discrete_run;
pub mod run;
pub mod sweep;

pub use accept::{run_acceptance, AcceptanceReport};
pub use checks::{find_criterion, CheckStatus, CheckVerdict, Criterion, Measurement, Relation, CRITERIA};
pub use config::{DiscreteConfig, RunConfig};
pub use discrete_run::{cmd_discrete, execute_discrete, DiscreteSummary};
pub use run::{cmd_run, execute, write_artifacts, RunOutcome, RunSummary};
pub use sweep::{cmd_sweep, SweepConfig, SweepReport};

use std::path::PathBuf;

/// Environment variable overriding the default output directory.
pub const OUT_ENV: &str = "TIKFLOW_OUT";
pub const DEFAULT_OUT: &str = "tikflow-out";

/// `--out`, else the config's `outputs`, else `$TIKFLOW_OUT`, else `tikflow-out`.
pub fn output_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}
