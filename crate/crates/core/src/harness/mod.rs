//! Seeded experiment runs, evaluation, CSV and heatmap output, and the
//! ablation studies.
//!
//! A run is a pure function of its [`RunConfig`]: every random stream
//! (initialisation, dynamics noise, resets, replay sampling, exploration,
//! evaluation) is derived from the seed, so repeating a run reproduces its
//! `metrics.csv` byte for byte.

pub mod ablation;
pub mod aggregate;
pub mod bench;
pub mod config;
pub mod heatmap;
pub mod learner;
pub mod planner;
pub mod run;

pub use ablation::{
    ablate_distance_policy_dependence, ablate_feedback, planner_success, run_seeds, trend_slope, wall_awareness,
    DataPolicy, Feedback, WallAwareness,
};
pub use aggregate::{aggregate, aggregate_runs, write_aggregate, Aggregate, AggregateRow};
pub use bench::bench;
pub use config::{Algorithm, RunConfig};
pub use heatmap::{export_heatmap, parse_heatmap, write_heatmap, HeatmapGrid};
pub use learner::Learner;
pub use planner::GridPlanner;
pub use run::{evaluate, parse_metrics, run, run_experiment, write_metrics, MetricRow, RunOutput};
