use super::model::Params;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
    pub step_count: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zero moments shaped like `params`; β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self::with_constants(params, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }

    pub fn with_constants(params: &[Tensor<T>], beta1: T, beta2: T, epsilon: T) -> Self {
        let zeros: Vec<Vec<T>> = params.iter().map(|t| vec![T::zero(); t.len()]).collect();
        Self { first_moment: zeros.clone(), second_moment: zeros, step_count: 0, beta1, beta2, epsilon }
    }

    pub fn for_params(params: &Params<T>) -> Self {
        Self::new(params.tensors())
    }
}

/// One Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    learning_rate: T,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Dimension { expected: params.len(), got: grads.len() });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.len() != g.len() {
            return Err(Error::Dimension { expected: p.len(), got: g.len() });
        }
    }
    state.step_count += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let t = state.step_count as i32;
    let correction1 = T::one() - b1.powi(t);
    let correction2 = T::one() - b2.powi(t);

    for ((p, g), (m, v)) in
        params.iter_mut().zip(grads).zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for (((theta, &gi), mi), vi) in
            p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut())
        {
            *mi = b1 * *mi + (T::one() - b1) * gi;
            *vi = b2 * *vi + (T::one() - b2) * gi * gi;
            let m_hat = *mi / correction1;
            let v_hat = *vi / correction2;
            *theta = *theta - learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
