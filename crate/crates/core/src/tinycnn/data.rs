use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Labelled images in `[N, H, W, C]` layout with a train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    images: Tensor<T>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        images: Tensor<T>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        if images.shape().len() != 4 {
            return Err(Error::Input(format!("images must be [N, H, W, C], got {:?}", images.shape())));
        }
        let n = images.shape()[0];
        if labels.len() != n {
            return Err(Error::Dimension { expected: n, got: labels.len() });
        }
        let k = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Input(format!("label {bad} outside [0, {k})")));
        }
        if let Some(v) = images.data().iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Input(format!("pixel value {v} outside [0, 1]")));
        }
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n || seen[i] {
                return Err(Error::Input(format!("split index {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("train/test split does not cover every sample".into()));
        }
        Ok(Self { images, labels, class_names, train, test })
    }

    pub fn images(&self) -> &Tensor<T> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn height(&self) -> usize {
        self.images.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.images.shape()[2]
    }

    pub fn channels(&self) -> usize {
        self.images.shape()[3]
    }

    fn sample_len(&self) -> usize {
        self.height() * self.width() * self.channels()
    }

    /// Pixels of one sample, `H·W·C` values.
    pub fn image(&self, i: usize) -> &[T] {
        let len = self.sample_len();
        &self.images.data()[i * len..][..len]
    }

    /// Gathers samples into a `[B, H, W, C]` batch.
    pub fn batch(&self, indices: &[usize]) -> Tensor<T> {
        let mut data = Vec::with_capacity(indices.len() * self.sample_len());
        for &i in indices {
            data.extend_from_slice(self.image(i));
        }
        Tensor::new(vec![indices.len(), self.height(), self.width(), self.channels()], data)
            .expect("gathered batch has consistent length")
    }

    pub fn labels_of(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn validate_for_training(&self) -> Result<()> {
        if self.num_classes() < 2 {
            return Err(Error::Config("dataset needs at least 2 classes".into()));
        }
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::Config("dataset needs non-empty train and test splits".into()));
        }
        if !self.height().is_multiple_of(2) || !self.width().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "image size {}×{} must be even in both dimensions",
                self.height(),
                self.width()
            )));
        }
        Ok(())
    }
}

/// Per-class 80/20 split. Each class with at least two samples keeps at
/// least one on each side; both index lists come back sorted.
pub fn stratified_split(labels: &[usize], num_classes: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..num_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = if n < 2 { n } else { ((0.8 * n as f64).round() as usize).clamp(1, n - 1) };
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

struct SoilFamily {
    name: &'static str,
    rgb: [f64; 3],
    /// Stripe cycles across the image width.
    frequency: f64,
}

const FAMILIES: [SoilFamily; 4] = [
    SoilFamily { name: "alluvial", rgb: [0.74, 0.60, 0.42], frequency: 1.0 },
    SoilFamily { name: "black", rgb: [0.20, 0.18, 0.17], frequency: 2.0 },
    SoilFamily { name: "clay", rgb: [0.56, 0.52, 0.48], frequency: 4.0 },
    SoilFamily { name: "red", rgb: [0.68, 0.28, 0.18], frequency: 6.0 },
];

/// Soil-like texture families: a class base colour, oriented sinusoidal
/// banding at a class frequency, per-image brightness jitter and pixel noise.
/// Samples are ordered class by class.
pub fn generate_synthetic_dataset<T: Scalar>(
    classes: usize,
    per_class: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    if !(2..=FAMILIES.len()).contains(&classes) {
        return Err(Error::Config(format!("synthetic classes must be in 2..=4, got {classes}")));
    }
    if per_class < 2 {
        return Err(Error::Config("synthetic per_class must be at least 2".into()));
    }
    if height == 0 || width == 0 || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
        return Err(Error::Config(format!("synthetic size {height}×{width} must be positive and even")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.04).expect("valid sigma");
    let n = classes * per_class;
    let mut data = Vec::with_capacity(n * height * width * 3);
    let mut labels = Vec::with_capacity(n);
    for (class, family) in FAMILIES.iter().take(classes).enumerate() {
        for _ in 0..per_class {
            let brightness = rng.random_range(-0.06..=0.06);
            let angle = rng.random_range(0.0..PI);
            let phase = rng.random_range(0.0..2.0 * PI);
            let (dir_x, dir_y) = (angle.cos(), angle.sin());
            for y in 0..height {
                for x in 0..width {
                    let u = (x as f64 * dir_x + y as f64 * dir_y) / width as f64;
                    let band = 0.12 * (2.0 * PI * family.frequency * u + phase).sin();
                    for channel in 0..3 {
                        let v = family.rgb[channel] + brightness + band + noise.sample(&mut rng);
                        data.push(T::lit(v.clamp(0.0, 1.0)));
                    }
                }
            }
            labels.push(class);
        }
    }
    let (train, test) = stratified_split(&labels, classes, seed ^ 0x5eed);
    let images = Tensor::new(vec![n, height, width, 3], data)?;
    let class_names = FAMILIES.iter().take(classes).map(|f| f.name.to_string()).collect();
    Dataset::new(images, labels, class_names, train, test)
}
