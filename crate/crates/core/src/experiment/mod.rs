//! Experiment files, the Monte-Carlo driver and result plots.

mod config;
pub mod plot;
mod run;

pub use config::{
    default_base, default_kernel, steady_state_steps, ExperimentConfig, ScenarioOverrides, ScenarioSpec,
    TrackerSpec, OUTPUT_DIR_ENV,
};
pub use run::{
    plot_csv, run_experiment, run_single, simulate_run, write_tracks_csv, ExperimentOutput, ExperimentSummary,
    Manifest, RunRecord, TrackerRun, TrackerSummary, CARDINALITY_SCHEMA, TRACKS_SCHEMA, VERSION,
};
