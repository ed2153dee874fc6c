//! Configuration, seeded episodes, experiment runs and output files.

pub mod config;
pub mod episode;
pub mod experiment;
pub mod fit;

pub use config::{ExperimentConfig, GameSpec, ThetaSpec};
pub use episode::{run_episode, Experiment, RoundRecord, Trajectory};
pub use experiment::{
    format_g9, run_experiment, run_sweep, write_csv, ExperimentResult, Summary, SweepSummary,
    CSV_HEADER,
};
pub use fit::{default_window, fit_loglog, fit_regret_exponent};
