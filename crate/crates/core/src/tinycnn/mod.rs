//! Minimal CNN engine: tensors, one conv/pool block, two dense layers,
//! softmax cross-entropy with backprop, Adam, training, and dataset I/O.

mod adam;
pub mod container;
mod data;
mod model;
pub mod ppm;
mod tensor;
mod train;

pub use adam::{adam_step, AdamState};
pub use data::{generate_synthetic_dataset, stratified_split, Dataset};
pub use model::{argmax, softmax_in_place, Architecture, CnnModel, Params, KERNEL};
pub use ppm::load_dataset;
pub use tensor::Tensor;
pub use train::{architecture_for, evaluate_model, initial_model, train, EpochStats};
