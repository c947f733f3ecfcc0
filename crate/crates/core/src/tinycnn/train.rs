use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::data::Dataset;
use super::model::{Architecture, CnnModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::HyperParams;

/// Mean training loss and running training accuracy of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats<T> {
    pub loss: T,
    pub accuracy: T,
}

pub fn architecture_for<T: Scalar>(hp: &HyperParams<T>, dataset: &Dataset<T>) -> Architecture {
    Architecture {
        height: dataset.height(),
        width: dataset.width(),
        channels: dataset.channels(),
        num_filters: hp.num_filters,
        dense_units: hp.dense_units,
        num_classes: dataset.num_classes(),
    }
}

/// The He-initialized model `train` starts from for this seed.
pub fn initial_model<T: Scalar>(hp: &HyperParams<T>, dataset: &Dataset<T>, seed: u64) -> Result<CnnModel<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CnnModel::he_normal(architecture_for(hp, dataset), hp.dropout_rate, &mut rng)
}

/// Mini-batch Adam on the train split. One seed drives initialization,
/// per-epoch shuffling and dropout masks.
pub fn train<T: Scalar>(
    hp: &HyperParams<T>,
    dataset: &Dataset<T>,
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> Result<(CnnModel<T>, Vec<EpochStats<T>>)> {
    if epochs == 0 || batch_size == 0 {
        return Err(Error::Config("epochs and batch_size must be at least 1".into()));
    }
    dataset.validate_for_training()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CnnModel::he_normal(architecture_for(hp, dataset), hp.dropout_rate, &mut rng)?;
    let mut adam = AdamState::for_params(model.params());
    let mut order = dataset.train_indices().to_vec();
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = T::zero();
        let mut correct = 0usize;
        for chunk in order.chunks(batch_size) {
            let batch = dataset.batch(chunk);
            let labels = dataset.labels_of(chunk);
            let (loss, grads, hits) =
                model.loss_grads_hits(&batch, &labels, &mut rng).map_err(|e| match e {
                    Error::Divergence { .. } => Error::Divergence { epoch: epoch + 1 },
                    other => other,
                })?;
            loss_sum = loss_sum + loss * T::from_count(chunk.len());
            correct += hits;
            adam_step(model.params_mut().tensors_mut(), grads.tensors(), &mut adam, hp.learning_rate)?;
            if !model.params().all_finite() {
                return Err(Error::Divergence { epoch: epoch + 1 });
            }
        }
        let n = T::from_count(order.len());
        history.push(EpochStats { loss: loss_sum / n, accuracy: T::from_count(correct) / n });
    }
    Ok((model, history))
}

/// Accuracy and argmax predictions (dropout off) over `indices`.
pub fn evaluate_model<T: Scalar>(
    model: &CnnModel<T>,
    dataset: &Dataset<T>,
    indices: &[usize],
) -> Result<(T, Vec<usize>)> {
    if indices.is_empty() {
        return Err(Error::Config("evaluation split is empty".into()));
    }
    let mut predictions = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(64) {
        predictions.extend(model.predict(&dataset.batch(chunk))?);
    }
    let correct = predictions.iter().zip(indices).filter(|(p, &i)| **p == dataset.labels()[i]).count();
    Ok((T::from_count(correct) / T::from_count(indices.len()), predictions))
}
