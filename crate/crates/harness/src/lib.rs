//! Batch runner for the mapping strategies: shared map sets, milestone
//! aggregation, margin-shifted comparisons and score-weight sweeps.

pub mod compare;
pub mod error;
pub mod maps;
pub mod output;
pub mod plan;
pub mod seeds;
pub mod sweep;

pub use compare::{compare, compare_pooled, ComparisonRow};
pub use error::{HarnessError, Result};
pub use maps::MapSource;
pub use plan::{run_plan, AggregateRow, EpisodeResult, ExperimentPlan, PlanResult, StrategyEntry, METRICS};
pub use sweep::{run_sweep, SweepResult, SweepRow, SweepSpec};
