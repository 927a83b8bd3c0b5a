//! Experiment configuration, baselines, convergence detection and metric export.
//!
//! A run writes three files:
//!
//! - `metrics.csv`: one row per (episode, step, layer) with columns
//!   `episode, step, layer, per_ue_se, sum_se, budgets, central_loss,
//!   local_loss, mean_priority, converged`. `per_ue_se` and `budgets` are
//!   `;`-separated lists; layer-2 budgets are per-antenna powers. Loss columns
//!   are empty on steps without an update.
//! - `summary.json`: a serialized [`RunSummary`].
//! - `timing.json`: wall-clock times, the only non-reproducible output.

mod baseline;
mod config;
mod run;

pub use baseline::{detect_convergence, fractional_baseline};
pub use config::{dump_config, load_config, ExperimentConfig};
pub use run::{
    evaluate_checkpoint, evaluate_policy, evaluation_placements, fractional_sum_se, metrics_csv, run_experiment,
    run_with_progress, simulate, sweep, sweep_csv, write_artifacts, EvalPoint, MetricRow, RunArtifacts, RunSummary,
    SimulationReport, SweepAxis, SweepRow, Timing,
};
