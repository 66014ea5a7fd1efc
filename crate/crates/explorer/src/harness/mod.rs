//! Experiment orchestration: the strict text config format, metrics
//! files and summaries, trajectory rendering, the evaluation experiment
//! runner, and the command-line interface.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod render;

pub use cli::cli;
pub use config::{load_config, parse_config, ExperimentConfig, PolicyKind};
pub use experiment::{generate_eval_maps, run_experiment, ExperimentOutputs};
pub use metrics::{
    compute_threshold_steps, derive_from_rows, episode_rows, format_sig9, mean_std,
    read_step_csv, summarize, write_episodes_csv, write_step_csv, write_summary_csv,
    DerivedMetrics, EpisodeRow, StepRow, SummaryRow, AOI_THRESHOLDS, CSV_HEADER,
};
pub use render::render_trajectory;
