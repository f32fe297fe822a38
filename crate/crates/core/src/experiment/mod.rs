//! Config files, sweeps over experiment grids and the reports built from them.

mod config;
mod report;
mod sweep;

pub use config::{RunSettings, RunSpec, SweepConfig, DEFAULT_BUDGET_MULTIPLIER, DEFAULT_STALL_GENERATIONS};
pub use report::{
    classify_report, cluster_report, error_table, rank_report, trajectory_matrix, ClusterOptions, GroupBy, Selection,
};
pub use sweep::{
    execute_run, plan, run_seed, run_sweep, write_atomic, Manifest, ManifestEntry, RunSummary, SweepReport,
    MANIFEST_FILE,
};
