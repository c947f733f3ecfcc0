//! Particle swarm and whale optimization over a [`SearchSpace`].
//!
//! Both loops are strictly sequential: the global best is refreshed right
//! after each evaluation, so evaluation order is part of the algorithm.

// A failed run hands back its partial trace by value.
#![allow(clippy::result_large_err)]

mod pso;
mod trace;
mod woa;

pub use pso::{pso_velocity_update, pso_velocity_update_per_dim, Particle, Pso, PsoConfig};
pub use trace::{OptimizationResult, RunFailure, Trace, TraceRecord, TraceRow, TraceTable};
pub use woa::{
    decay_schedule, woa_coefficients, woa_position_update, woa_spiral_update, Woa, WoaCoefficients, WoaConfig,
};

use crate::error::Error;
use crate::objective::Objective;
use crate::scalar::Scalar;
use crate::space::{Position, SearchSpace};

pub type RunOutcome<T> = Result<OptimizationResult<T>, RunFailure<T>>;

/// Evaluates candidates, logs them, and tracks the incumbent.
struct Tracker<'a, T: Scalar, O: ?Sized> {
    space: &'a SearchSpace<T>,
    objective: &'a O,
    trace: Trace<T>,
    best: Option<(Position<T>, T)>,
}

impl<'a, T: Scalar, O: Objective<T> + ?Sized> Tracker<'a, T, O> {
    fn new(space: &'a SearchSpace<T>, objective: &'a O) -> Self {
        Self { space, objective, trace: Trace::new(space), best: None }
    }

    /// Returns the fitness of `pos`; updates the incumbent on strict improvement.
    fn evaluate(&mut self, iteration: usize, pos: &Position<T>) -> Result<T, Error> {
        let candidate = self.space.decode_values(pos)?;
        let eval = self.objective.evaluate(pos, self.space)?;
        if !eval.fitness.is_finite() {
            return Err(Error::Input(format!(
                "objective `{}` returned non-finite fitness {}",
                self.objective.name(),
                eval.fitness
            )));
        }
        let improved = match &self.best {
            None => true,
            Some((_, b)) => eval.fitness < *b,
        };
        if improved {
            self.best = Some((pos.clone(), eval.fitness));
        }
        let best_so_far = self.best.as_ref().map(|b| b.1).unwrap();
        self.trace.push(TraceRecord {
            evaluation: self.trace.len() + 1,
            iteration,
            position: pos.clone(),
            candidate,
            fitness: eval.fitness,
            best_so_far,
            flagged: eval.flagged,
        });
        Ok(eval.fitness)
    }

    fn best(&self) -> (&Position<T>, T) {
        let (p, f) = self.best.as_ref().expect("at least one evaluation");
        (p, *f)
    }

    fn fail(self, error: Error) -> RunFailure<T> {
        RunFailure { error, partial: self.trace }
    }

    fn finish(self) -> RunOutcome<T> {
        let (best_position, best_fitness) = match self.best {
            Some(b) => b,
            None => {
                return Err(RunFailure {
                    error: Error::Input("no evaluations performed".into()),
                    partial: self.trace,
                })
            }
        };
        let best_values = match self.space.decode_values(&best_position) {
            Ok(v) => v,
            Err(e) => return Err(RunFailure { error: e, partial: self.trace }),
        };
        let best_hyperparams =
            if self.space.is_hyperparameter_space() { self.space.decode(&best_position).ok() } else { None };
        let evaluations = self.trace.len();
        Ok(OptimizationResult {
            best_position,
            best_values,
            best_hyperparams,
            best_fitness,
            trace: self.trace,
            evaluations,
        })
    }
}

fn check_len<T>(expected: usize, v: &[T]) -> Result<(), Error> {
    if v.len() != expected {
        return Err(Error::Dimension { expected, got: v.len() });
    }
    Ok(())
}
