//! Command-line experiment harness: data loading, scenarios, orchestration
//! and report files.

pub mod config;
pub mod experiment;
pub mod idx;
pub mod report;
pub mod scenario;

pub use config::{DataConfig, EvalConfig, ExperimentConfig};
pub use experiment::{run_eval, run_experiment, run_search_only, run_train, Dataset, RunResult};
pub use scenario::{build_scenario, EvalPoints, ScenarioMode, ScenarioSpec, TrainingStream};
