//! The network: conv 3×3 (same padding) → ReLU → max-pool 2×2 → flatten →
//! dense + ReLU → dropout → dense → softmax, with hand-written backprop.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const KERNEL: usize = 3;

/// The six trainable arrays, in a fixed order shared by weights, gradients
/// and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    tensors: [Tensor<T>; 6],
}

impl<T: Scalar> Params<T> {
    pub const NAMES: [&'static str; 6] =
        ["conv_kernels", "conv_bias", "dense1_weights", "dense1_bias", "dense2_weights", "dense2_bias"];

    fn zeros(channels: usize, nf: usize, flat: usize, nd: usize, k: usize) -> Self {
        Self {
            tensors: [
                Tensor::zeros(vec![nf, KERNEL, KERNEL, channels]),
                Tensor::zeros(vec![nf]),
                Tensor::zeros(vec![flat, nd]),
                Tensor::zeros(vec![nd]),
                Tensor::zeros(vec![nd, k]),
                Tensor::zeros(vec![k]),
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self { tensors: self.tensors.clone().map(|t| Tensor::zeros(t.shape().to_vec())) }
    }

    pub fn from_tensors(tensors: [Tensor<T>; 6]) -> Self {
        Self { tensors }
    }

    pub fn tensors(&self) -> &[Tensor<T>; 6] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>; 6] {
        &mut self.tensors
    }

    pub fn conv_kernels(&self) -> &Tensor<T> {
        &self.tensors[0]
    }
    pub fn conv_bias(&self) -> &Tensor<T> {
        &self.tensors[1]
    }
    pub fn dense1_weights(&self) -> &Tensor<T> {
        &self.tensors[2]
    }
    pub fn dense1_bias(&self) -> &Tensor<T> {
        &self.tensors[3]
    }
    pub fn dense2_weights(&self) -> &Tensor<T> {
        &self.tensors[4]
    }
    pub fn dense2_bias(&self) -> &Tensor<T> {
        &self.tensors[5]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }

    pub fn same_shapes(&self, other: &Self) -> bool {
        self.tensors.iter().zip(&other.tensors).all(|(a, b)| a.shape() == b.shape())
    }
}

/// Input geometry plus layer widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub num_filters: usize,
    pub dense_units: usize,
    pub num_classes: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0
            || self.width == 0
            || !self.height.is_multiple_of(2)
            || !self.width.is_multiple_of(2)
        {
            return Err(Error::Input(format!(
                "input {}×{} must have positive even height and width",
                self.height, self.width
            )));
        }
        if self.channels == 0 || self.num_filters == 0 || self.dense_units == 0 || self.num_classes < 2 {
            return Err(Error::Input(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }

    /// `N_f · (H/2) · (W/2)`.
    pub fn flattened_dim(&self) -> usize {
        self.num_filters * (self.height / 2) * (self.width / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T> {
    arch: Architecture,
    params: Params<T>,
    dropout_rate: T,
}

/// Intermediate activations kept for the backward pass.
struct Cache<T> {
    batch: usize,
    conv_pre: Vec<T>,
    pool_argmax: Vec<usize>,
    flat: Vec<T>,
    hidden_pre: Vec<T>,
    dropped: Vec<T>,
    mask: Option<Vec<T>>,
    probs: Vec<T>,
}

impl<T: Scalar> CnnModel<T> {
    /// All weights and biases zero.
    pub fn zeros(arch: Architecture, dropout_rate: T) -> Result<Self> {
        arch.validate()?;
        if !(dropout_rate >= T::zero() && dropout_rate < T::one()) {
            return Err(Error::Input(format!("dropout rate {dropout_rate} outside [0, 1)")));
        }
        let params = Params::zeros(
            arch.channels,
            arch.num_filters,
            arch.flattened_dim(),
            arch.dense_units,
            arch.num_classes,
        );
        Ok(Self { arch, params, dropout_rate })
    }

    /// He-normal weights (variance 2/fan-in) for every layer, zero biases.
    pub fn he_normal<R: Rng + ?Sized>(arch: Architecture, dropout_rate: T, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(arch, dropout_rate)?;
        let fan_ins = [KERNEL * KERNEL * arch.channels, arch.flattened_dim(), arch.dense_units];
        for (idx, fan_in) in [0usize, 2, 4].into_iter().zip(fan_ins) {
            let std = (2.0 / fan_in as f64).sqrt();
            for w in model.params.tensors[idx].data_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *w = T::lit(z * std);
            }
        }
        Ok(model)
    }

    pub fn from_params(arch: Architecture, params: Params<T>, dropout_rate: T) -> Result<Self> {
        let template = Self::zeros(arch, dropout_rate)?;
        if !template.params.same_shapes(&params) {
            return Err(Error::Input("parameter shapes do not match the architecture".into()));
        }
        Ok(Self { arch, params, dropout_rate })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    pub fn dropout_rate(&self) -> T {
        self.dropout_rate
    }

    pub fn flattened_dim(&self) -> usize {
        self.arch.flattened_dim()
    }

    fn check_batch(&self, batch: &Tensor<T>) -> Result<usize> {
        let s = batch.shape();
        let a = &self.arch;
        if s.len() != 4 || s[1] != a.height || s[2] != a.width || s[3] != a.channels {
            return Err(Error::Input(format!(
                "batch shape {s:?} does not match model input [B, {}, {}, {}]",
                a.height, a.width, a.channels
            )));
        }
        Ok(s[0])
    }

    /// Class probabilities, shape `[B, num_classes]`. Dropout is applied only
    /// when `training` is set.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        training: bool,
        rng: &mut R,
    ) -> Result<Tensor<T>> {
        let cache = self.forward_cached(batch, training, rng)?;
        Tensor::new(vec![cache.batch, self.arch.num_classes], cache.probs)
    }

    /// Argmax predictions with dropout disabled; ties go to the lower class.
    pub fn predict(&self, batch: &Tensor<T>) -> Result<Vec<usize>> {
        // Not consumed: dropout is off outside training.
        let mut unused = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let cache = self.forward_cached(batch, false, &mut unused)?;
        Ok(cache.probs.chunks(self.arch.num_classes).map(argmax).collect())
    }

    fn forward_cached<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        training: bool,
        rng: &mut R,
    ) -> Result<Cache<T>> {
        let b = self.check_batch(batch)?;
        let Architecture {
            height: h,
            width: w,
            channels: c,
            num_filters: nf,
            dense_units: nd,
            num_classes: k,
        } = self.arch;
        let input = batch.data();
        let kern = self.params.conv_kernels().data();
        let kbias = self.params.conv_bias().data();
        let patch_len = KERNEL * KERNEL * c;

        // Convolution, stride 1, zero padding of 1.
        let mut conv_pre = vec![T::zero(); b * h * w * nf];
        let mut patch = vec![T::zero(); patch_len];
        for n in 0..b {
            for y in 0..h {
                for x in 0..w {
                    fill_patch(input, n, y, x, h, w, c, &mut patch);
                    let out = &mut conv_pre[((n * h + y) * w + x) * nf..][..nf];
                    for (f, o) in out.iter_mut().enumerate() {
                        *o = kbias[f] + dot(&kern[f * patch_len..][..patch_len], &patch);
                    }
                }
            }
        }

        // ReLU then 2×2 max-pool, flattened as [H/2, W/2, N_f].
        let (ph, pw) = (h / 2, w / 2);
        let flat_dim = ph * pw * nf;
        let mut flat = vec![T::zero(); b * flat_dim];
        let mut pool_argmax = vec![0usize; b * flat_dim];
        for n in 0..b {
            for i in 0..ph {
                for j in 0..pw {
                    for f in 0..nf {
                        let mut best = T::neg_infinity();
                        let mut best_idx = 0;
                        for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                            let idx = ((n * h + 2 * i + dy) * w + 2 * j + dx) * nf + f;
                            let v = relu(conv_pre[idx]);
                            if v > best {
                                best = v;
                                best_idx = idx;
                            }
                        }
                        let o = n * flat_dim + (i * pw + j) * nf + f;
                        flat[o] = best;
                        pool_argmax[o] = best_idx;
                    }
                }
            }
        }

        // Dense + ReLU.
        let w1 = self.params.dense1_weights().data();
        let b1 = self.params.dense1_bias().data();
        let mut hidden_pre = vec![T::zero(); b * nd];
        for n in 0..b {
            let row = &mut hidden_pre[n * nd..][..nd];
            row.copy_from_slice(b1);
            for (i, &a) in flat[n * flat_dim..][..flat_dim].iter().enumerate() {
                if a != T::zero() {
                    axpy(a, &w1[i * nd..][..nd], row);
                }
            }
        }

        // Inverted dropout.
        let mut dropped: Vec<T> = hidden_pre.iter().map(|&v| relu(v)).collect();
        let mask = if training && self.dropout_rate > T::zero() {
            let keep_scale = T::one() / (T::one() - self.dropout_rate);
            let p = self.dropout_rate.to_f64_lossy();
            let mask: Vec<T> = (0..dropped.len())
                .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep_scale })
                .collect();
            dropped.iter_mut().zip(&mask).for_each(|(d, &m)| *d = *d * m);
            Some(mask)
        } else {
            None
        };

        // Output layer and softmax.
        let w2 = self.params.dense2_weights().data();
        let b2 = self.params.dense2_bias().data();
        let mut probs = vec![T::zero(); b * k];
        for n in 0..b {
            let row = &mut probs[n * k..][..k];
            row.copy_from_slice(b2);
            for (j, &a) in dropped[n * nd..][..nd].iter().enumerate() {
                if a != T::zero() {
                    axpy(a, &w2[j * k..][..k], row);
                }
            }
            softmax_in_place(row);
        }

        debug_assert!(probs.iter().all(|v| v.is_finite()), "non-finite probabilities");
        Ok(Cache { batch: b, conv_pre, pool_argmax, flat, hidden_pre, dropped, mask, probs })
    }

    /// Mean cross-entropy of the batch and its gradient for every parameter.
    pub fn loss_and_grads<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        labels: &[usize],
        training: bool,
        rng: &mut R,
    ) -> Result<(T, Params<T>)> {
        self.backward(batch, labels, training, rng).map(|(l, g, _)| (l, g))
    }

    /// Training-mode loss, gradients, and number of argmax hits.
    pub(crate) fn loss_grads_hits<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        labels: &[usize],
        rng: &mut R,
    ) -> Result<(T, Params<T>, usize)> {
        self.backward(batch, labels, true, rng)
    }

    fn backward<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        labels: &[usize],
        training: bool,
        rng: &mut R,
    ) -> Result<(T, Params<T>, usize)> {
        let b = self.check_batch(batch)?;
        if labels.len() != b {
            return Err(Error::Dimension { expected: b, got: labels.len() });
        }
        let Architecture {
            height: h,
            width: w,
            channels: c,
            num_filters: nf,
            dense_units: nd,
            num_classes: k,
        } = self.arch;
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Input(format!("label {bad} outside [0, {k})")));
        }
        let cache = self.forward_cached(batch, training, rng)?;
        let loss = cross_entropy(&cache.probs, labels, k, b);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch: 0 });
        }

        let mut grads = self.params.zeros_like();
        let inv_b = T::one() / T::from_count(b);

        // d loss / d logits = (p − onehot) / B
        let mut dlogits = cache.probs.clone();
        for (n, &l) in labels.iter().enumerate() {
            dlogits[n * k + l] = dlogits[n * k + l] - T::one();
        }
        dlogits.iter_mut().for_each(|v| *v = *v * inv_b);

        let [dk, dkb, dw1, db1, dw2, db2] = grads.tensors_mut();

        // Output layer.
        let w2 = self.params.dense2_weights().data();
        let mut dhidden = vec![T::zero(); b * nd];
        for n in 0..b {
            let g = &dlogits[n * k..][..k];
            add_assign(db2.data_mut(), g);
            let act = &cache.dropped[n * nd..][..nd];
            let dw2 = dw2.data_mut();
            for (j, &a) in act.iter().enumerate() {
                if a != T::zero() {
                    axpy(a, g, &mut dw2[j * k..][..k]);
                }
                dhidden[n * nd + j] = dot(&w2[j * k..][..k], g);
            }
        }
        // Through dropout and ReLU.
        for (i, d) in dhidden.iter_mut().enumerate() {
            let m = cache.mask.as_ref().map_or(T::one(), |m| m[i]);
            *d = if cache.hidden_pre[i] > T::zero() { *d * m } else { T::zero() };
        }

        // First dense layer.
        let flat_dim = self.arch.flattened_dim();
        let w1 = self.params.dense1_weights().data();
        let mut dflat = vec![T::zero(); b * flat_dim];
        for n in 0..b {
            let g = &dhidden[n * nd..][..nd];
            add_assign(db1.data_mut(), g);
            let act = &cache.flat[n * flat_dim..][..flat_dim];
            let dw1 = dw1.data_mut();
            for (i, &a) in act.iter().enumerate() {
                let wrow = &w1[i * nd..][..nd];
                if a != T::zero() {
                    axpy(a, g, &mut dw1[i * nd..][..nd]);
                }
                dflat[n * flat_dim + i] = dot(wrow, g);
            }
        }

        // Un-pool into the conv output, then through ReLU.
        let mut dconv = vec![T::zero(); b * h * w * nf];
        for (o, &src) in cache.pool_argmax.iter().enumerate() {
            if cache.conv_pre[src] > T::zero() {
                dconv[src] = dconv[src] + dflat[o];
            }
        }

        // Kernel and bias gradients.
        let patch_len = KERNEL * KERNEL * c;
        let mut patch = vec![T::zero(); patch_len];
        let input = batch.data();
        let dk = dk.data_mut();
        let dkb = dkb.data_mut();
        for n in 0..b {
            for y in 0..h {
                for x in 0..w {
                    let g = &dconv[((n * h + y) * w + x) * nf..][..nf];
                    if g.iter().all(|v| *v == T::zero()) {
                        continue;
                    }
                    fill_patch(input, n, y, x, h, w, c, &mut patch);
                    for (f, &gf) in g.iter().enumerate() {
                        if gf != T::zero() {
                            dkb[f] = dkb[f] + gf;
                            axpy(gf, &patch, &mut dk[f * patch_len..][..patch_len]);
                        }
                    }
                }
            }
        }

        debug_assert!(grads.all_finite(), "non-finite gradients");
        let hits = cache.probs.chunks(k).zip(labels).filter(|(row, &l)| argmax(row) == l).count();
        Ok((loss, grads, hits))
    }

    /// Mean cross-entropy only.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        labels: &[usize],
        training: bool,
        rng: &mut R,
    ) -> Result<T> {
        let b = self.check_batch(batch)?;
        if labels.len() != b {
            return Err(Error::Dimension { expected: b, got: labels.len() });
        }
        let cache = self.forward_cached(batch, training, rng)?;
        Ok(cross_entropy(&cache.probs, labels, self.arch.num_classes, b))
    }
}

fn cross_entropy<T: Scalar>(probs: &[T], labels: &[usize], k: usize, b: usize) -> T {
    // Probabilities come from a max-shifted softmax and are floored at the
    // smallest positive value, so ln never sees zero.
    let total: T = labels.iter().enumerate().map(|(n, &l)| -probs[n * k + l].ln()).sum();
    total / T::from_count(b)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn fill_patch<T: Scalar>(
    input: &[T],
    n: usize,
    y: usize,
    x: usize,
    h: usize,
    w: usize,
    c: usize,
    patch: &mut [T],
) {
    let mut p = 0;
    for dy in 0..KERNEL {
        let yy = y as isize + dy as isize - 1;
        for dx in 0..KERNEL {
            let xx = x as isize + dx as isize - 1;
            if yy < 0 || yy >= h as isize || xx < 0 || xx >= w as isize {
                patch[p..p + c].fill(T::zero());
            } else {
                let base = ((n * h + yy as usize) * w + xx as usize) * c;
                patch[p..p + c].copy_from_slice(&input[base..base + c]);
            }
            p += c;
        }
    }
}

#[inline]
fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi = *yi + alpha * xi);
}

#[inline]
fn add_assign<T: Scalar>(y: &mut [T], x: &[T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi = *yi + xi);
}

/// Max-shifted softmax; entries are floored at the smallest positive value.
pub fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = (*v / sum).max(T::min_positive_value());
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
