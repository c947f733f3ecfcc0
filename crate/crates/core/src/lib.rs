//! Swarm hyperparameter search for a small convolutional image classifier.
//!
//! Particle swarm ([`swarm::Pso`]) and whale optimization ([`swarm::Woa`])
//! minimize an [`objective::Objective`] over a box-bounded
//! [`space::SearchSpace`]. The CNN objective trains the network in
//! [`tinycnn`] and scores `1 − test accuracy`; analytic benchmarks let the
//! optimizers be checked without any data.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod objective;
mod scalar;
pub mod space;
pub mod swarm;
pub mod tinycnn;

pub use error::{Error, Result};
pub use scalar::{format_sig17, Scalar};

pub type SearchSpace64 = space::SearchSpace<f64>;
pub type SearchSpace32 = space::SearchSpace<f32>;
pub type Position64 = space::Position<f64>;
pub type Position32 = space::Position<f32>;
pub type HyperParams64 = space::HyperParams<f64>;
pub type HyperParams32 = space::HyperParams<f32>;
pub type Pso64 = swarm::Pso<f64>;
pub type Pso32 = swarm::Pso<f32>;
pub type Woa64 = swarm::Woa<f64>;
pub type Woa32 = swarm::Woa<f32>;
pub type OptimizationResult64 = swarm::OptimizationResult<f64>;
pub type OptimizationResult32 = swarm::OptimizationResult<f32>;
pub type CnnModel64 = tinycnn::CnnModel<f64>;
pub type CnnModel32 = tinycnn::CnnModel<f32>;
pub type Dataset64 = tinycnn::Dataset<f64>;
pub type Dataset32 = tinycnn::Dataset<f32>;
pub type Tensor64 = tinycnn::Tensor<f64>;
pub type Tensor32 = tinycnn::Tensor<f32>;
