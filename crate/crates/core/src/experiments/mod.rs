//! Experiment drivers, configuration and result files.

pub mod bounds;
pub mod config;
pub mod densities;
pub mod flow_vs_kde;
pub mod manifold_run;
pub mod output;
pub mod rate;
pub mod record;
pub mod tv_example;

pub use bounds::run_bounds_check;
pub use config::{ExperimentConfig, ExperimentKind, SigmaPolicy};
pub use densities::{DensityKind, TestDensity};
pub use flow_vs_kde::run_flow_vs_kde;
pub use manifold_run::{run_manifold_experiment, run_rate_manifold};
pub use output::{to_csv, write_record};
pub use rate::run_rate_experiment;
pub use record::{Aggregate, Row, RunRecord, SlopeRecord};
pub use tv_example::run_tv_example;

use crate::error::Result;

/// Runs whichever experiment the config names.
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    match cfg.experiment {
        ExperimentKind::Rate => run_rate_experiment(cfg),
        ExperimentKind::RateManifold => run_rate_manifold(cfg),
        ExperimentKind::FlowVsKde => run_flow_vs_kde(cfg),
        ExperimentKind::TvExample => run_tv_example(cfg),
        ExperimentKind::BoundsCheck => run_bounds_check(cfg),
        ExperimentKind::ManifoldRun => run_manifold_experiment(cfg),
    }
}
