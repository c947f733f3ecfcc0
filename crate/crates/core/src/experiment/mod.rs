//! Config-driven experiment runs and their on-disk artifacts.

pub mod config;
mod run;

pub use config::{
    derive_seed, iterations_for_budget, parse_config, parse_config_str, parse_size, Algorithm, CnnSettings,
    DatasetSource, ExperimentConfig, ObjectiveSpec,
};
pub use run::{
    generate_data, materialize_dataset, parse_best, render_best, retrain_and_score, run_experiment, run_seed,
    run_training, summarize_trace, AlgorithmOutcome, ExperimentSummary,
};
