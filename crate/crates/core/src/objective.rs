//! Fitness functions the swarm optimizers minimize.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{Position, SearchSpace};
use crate::tinycnn::{self, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub fitness: T,
    /// The fitness is a substituted worst case rather than a measurement.
    pub flagged: bool,
}

impl<T> Evaluation<T> {
    pub fn ok(fitness: T) -> Self {
        Self { fitness, flagged: false }
    }
}

/// Maps a candidate position to a fitness to minimize.
///
/// Implementations must be deterministic for a fixed candidate.
pub trait Objective<T: Scalar> {
    fn name(&self) -> &str;

    fn evaluate(&self, position: &Position<T>, space: &SearchSpace<T>) -> Result<Evaluation<T>>;
}

/// Adapts a closure over decoded parameter values.
pub struct FnObjective<F> {
    name: String,
    f: F,
}

impl<F> FnObjective<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T> Objective<T> for FnObjective<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, position: &Position<T>, space: &SearchSpace<T>) -> Result<Evaluation<T>> {
        let values = space.decode_values(&space.clip(position)?)?;
        Ok(Evaluation::ok((self.f)(&values)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl BenchmarkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::Sphere => "sphere",
            BenchmarkKind::Rastrigin => "rastrigin",
            BenchmarkKind::Rosenbrock => "rosenbrock",
        }
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "rastrigin" => Ok(Self::Rastrigin),
            "rosenbrock" => Ok(Self::Rosenbrock),
            other => Err(Error::Config(format!("unknown benchmark `{other}`"))),
        }
    }
}

/// Evaluates one of the analytic test functions at `x`.
pub fn benchmark_eval<T: Scalar>(kind: BenchmarkKind, x: &[T]) -> T {
    match kind {
        BenchmarkKind::Sphere => x.iter().map(|&v| v * v).sum(),
        BenchmarkKind::Rastrigin => {
            let ten = T::lit(10.0);
            let two_pi = T::lit(2.0 * PI);
            ten * T::from_count(x.len()) + x.iter().map(|&v| v * v - ten * (two_pi * v).cos()).sum::<T>()
        }
        BenchmarkKind::Rosenbrock => x
            .windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                let b = T::one() - w[0];
                T::lit(100.0) * a * a + b * b
            })
            .sum(),
    }
}

/// Looks up a benchmark by name.
pub fn benchmark_by_name<T: Scalar>(name: &str, x: &[T]) -> Result<T> {
    Ok(benchmark_eval(name.parse()?, x))
}

#[derive(Debug, Clone, Copy)]
pub struct Benchmark {
    kind: BenchmarkKind,
}

impl Benchmark {
    pub fn new(kind: BenchmarkKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }
}

impl<T: Scalar> Objective<T> for Benchmark {
    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn evaluate(&self, position: &Position<T>, space: &SearchSpace<T>) -> Result<Evaluation<T>> {
        let values = space.decode_values(&space.clip(position)?)?;
        Ok(Evaluation::ok(benchmark_eval(self.kind, &values)))
    }
}

#[derive(Debug, Clone)]
pub struct CnnObjectiveConfig<T> {
    pub dataset: Arc<Dataset<T>>,
    pub eval_epochs: usize,
    pub batch_size: usize,
    /// Shared by every candidate so fitness differences come from the
    /// hyperparameters, not the initialization.
    pub objective_seed: u64,
}

/// Fitness = 1 − test accuracy of the CNN trained with the candidate's
/// hyperparameters.
#[derive(Debug, Clone)]
pub struct CnnObjective<T> {
    config: CnnObjectiveConfig<T>,
}

impl<T: Scalar> CnnObjective<T> {
    pub fn new(config: CnnObjectiveConfig<T>) -> Result<Self> {
        if config.eval_epochs == 0 {
            return Err(Error::Config("eval_epochs must be at least 1".into()));
        }
        if config.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        config.dataset.validate_for_training()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &CnnObjectiveConfig<T> {
        &self.config
    }
}

/// `1 − accuracy`.
pub fn fitness_from_accuracy<T: Scalar>(accuracy: T) -> T {
    T::one() - accuracy
}

/// Trains, evaluates, and scores one candidate. Divergence scores 1.0 and
/// is flagged instead of failing the search.
pub fn cnn_fitness<T: Scalar>(
    candidate: &Position<T>,
    space: &SearchSpace<T>,
    config: &CnnObjectiveConfig<T>,
) -> Result<Evaluation<T>> {
    let hp = space.decode(&space.clip(candidate)?)?;
    let data = &config.dataset;
    match tinycnn::train(&hp, data, config.eval_epochs, config.batch_size, config.objective_seed) {
        Ok((model, _)) => {
            let (accuracy, _) = tinycnn::evaluate_model(&model, data, data.test_indices())?;
            Ok(Evaluation::ok(fitness_from_accuracy(accuracy)))
        }
        Err(Error::Divergence { epoch }) => {
            log::warn!("candidate {hp:?} diverged in epoch {epoch}; scoring 1.0");
            Ok(Evaluation { fitness: T::one(), flagged: true })
        }
        Err(e) => Err(e),
    }
}

impl<T: Scalar> Objective<T> for CnnObjective<T> {
    fn name(&self) -> &str {
        "cnn"
    }

    fn evaluate(&self, position: &Position<T>, space: &SearchSpace<T>) -> Result<Evaluation<T>> {
        cnn_fitness(position, space, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_minima() {
        assert_eq!(benchmark_eval(BenchmarkKind::Sphere, &[0.0f64; 4]), 0.0);
        assert_eq!(benchmark_eval(BenchmarkKind::Rastrigin, &[0.0f64; 4]), 0.0);
        assert_eq!(benchmark_eval(BenchmarkKind::Rosenbrock, &[1.0f64, 1.0]), 0.0);
        assert_eq!(benchmark_eval(BenchmarkKind::Sphere, &[1.0f64, 2.0]), 5.0);
    }

    #[test]
    fn unknown_benchmark_is_config_error() {
        assert!(matches!(benchmark_by_name::<f64>("ackley", &[0.0]), Err(Error::Config(_))));
        assert_eq!(benchmark_by_name::<f64>("sphere", &[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn fitness_is_one_minus_accuracy() {
        assert!((fitness_from_accuracy(0.96f64) - 0.04).abs() < 1e-12);
        assert!((fitness_from_accuracy(0.94f64) - 0.06).abs() < 1e-12);
        assert_eq!(fitness_from_accuracy(1.0f64), 0.0);
    }

    #[test]
    fn benchmark_objective_clips_out_of_range_candidates() {
        let space = SearchSpace::uniform_box(2, -1.0, 1.0).unwrap();
        let e =
            Benchmark::new(BenchmarkKind::Sphere).evaluate(&Position::new(vec![3.0, 0.5]), &space).unwrap();
        assert_eq!(e.fitness, 1.25);
    }
}
