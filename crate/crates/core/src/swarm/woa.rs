use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, RunOutcome, Tracker};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::scalar::Scalar;
use crate::space::{Position, SearchSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct WoaConfig<T> {
    pub population_size: usize,
    pub iterations: usize,
    pub spiral_b: T,
    pub seed: u64,
    /// Always apply the spiral move after encircling/exploration, discarding
    /// their result, instead of choosing between them with a coin flip.
    pub literal_spiral: bool,
}

impl<T: Scalar> Default for WoaConfig<T> {
    /// Five whales, ten iterations, b = 1.
    fn default() -> Self {
        Self { population_size: 5, iterations: 10, spiral_b: T::one(), seed: 0, literal_spiral: false }
    }
}

impl<T: Scalar> WoaConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::Config("woa.population_size must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("woa.iterations must be at least 1".into()));
        }
        if !self.spiral_b.is_finite() {
            return Err(Error::Config("woa.spiral_b must be finite".into()));
        }
        Ok(())
    }

    pub fn evaluation_budget(&self) -> usize {
        self.population_size * (1 + self.iterations)
    }
}

/// Per-whale random coefficients for one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WoaCoefficients<T> {
    pub a: T,
    pub big_a: T,
    pub big_c: T,
    pub l: T,
    pub switch: T,
}

impl<T: Scalar> WoaCoefficients<T> {
    /// `A = 2·a·r1 − a`, `C = 2·r2`.
    pub fn from_draws(a: T, r1: T, r2: T, l: T, switch: T) -> Self {
        let two = T::lit(2.0);
        Self { a, big_a: two * a * r1 - a, big_c: two * r2, l, switch }
    }
}

/// Linear decay of `a` from 2 at the first iteration to 0 at the last
/// (0-based `iteration`). A single-iteration run stays at 2.
pub fn decay_schedule<T: Scalar>(iteration: usize, max_iterations: usize) -> T {
    let two = T::lit(2.0);
    if max_iterations <= 1 {
        return two;
    }
    let t = iteration.min(max_iterations - 1);
    two - two * T::from_count(t) / T::from_count(max_iterations - 1)
}

/// Draws r1, r2, l, switch in that order.
pub fn woa_coefficients<T: Scalar, R: Rng + ?Sized>(
    iteration: usize,
    max_iterations: usize,
    rng: &mut R,
) -> WoaCoefficients<T> {
    let a = decay_schedule(iteration, max_iterations);
    let r1 = T::lit(rng.random::<f64>());
    let r2 = T::lit(rng.random::<f64>());
    let l = T::lit(rng.random_range(-1.0..=1.0));
    let switch = T::lit(rng.random::<f64>());
    WoaCoefficients::from_draws(a, r1, r2, l, switch)
}

/// `target − A·|C·target − x|`, elementwise. Encircling when `target` is the
/// best whale, exploration when it is a random one.
fn encircle<T: Scalar>(x: &[T], target: &[T], big_a: T, big_c: T) -> Vec<T> {
    x.iter().zip(target).map(|(&xi, &ti)| ti - big_a * (big_c * ti - xi).abs()).collect()
}

/// `|best − x|·e^{b·l}·cos(2πl) + best`.
pub fn woa_spiral_update<T: Scalar>(x: &Position<T>, best: &Position<T>, l: T, b: T) -> Result<Position<T>> {
    check_len(x.len(), best.coords())?;
    let factor = (b * l).exp() * (T::lit(2.0 * PI) * l).cos();
    Ok(Position::new(
        x.coords().iter().zip(best.coords()).map(|(&xi, &bi)| (bi - xi).abs() * factor + bi).collect(),
    ))
}

/// One whale move, before clipping. `switch < 0.5` selects encircling
/// (`|A| < 1`) or exploration around `rand_whale` (`|A| ≥ 1`); otherwise the
/// spiral move around `best`.
pub fn woa_position_update<T: Scalar>(
    x: &Position<T>,
    best: &Position<T>,
    rand_whale: &Position<T>,
    coeffs: &WoaCoefficients<T>,
    b: T,
) -> Result<Position<T>> {
    check_len(x.len(), best.coords())?;
    check_len(x.len(), rand_whale.coords())?;
    let half = T::lit(0.5);
    if coeffs.switch < half {
        let target = if coeffs.big_a.abs() < T::one() { best } else { rand_whale };
        Ok(Position::new(encircle(x.coords(), target.coords(), coeffs.big_a, coeffs.big_c)))
    } else {
        woa_spiral_update(x, best, coeffs.l, b)
    }
}

#[derive(Debug, Clone)]
pub struct Woa<T> {
    config: WoaConfig<T>,
}

impl<T: Scalar> Woa<T> {
    pub fn new(config: WoaConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &WoaConfig<T> {
        &self.config
    }

    pub fn run<O: Objective<T> + ?Sized>(&self, space: &SearchSpace<T>, objective: &O) -> RunOutcome<T> {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut tracker = Tracker::new(space, objective);

        let mut whales: Vec<Position<T>> = Vec::with_capacity(cfg.population_size);
        for _ in 0..cfg.population_size {
            let p = space.sample(&mut rng);
            if let Err(e) = tracker.evaluate(0, &p) {
                return Err(tracker.fail(e));
            }
            whales.push(p);
        }

        let n = whales.len();
        for t in 0..cfg.iterations {
            for i in 0..n {
                let coeffs: WoaCoefficients<T> = woa_coefficients(t, cfg.iterations, &mut rng);
                let best = tracker.best().0.clone();
                let far = coeffs.big_a.abs() >= T::one();
                let needs_partner = if cfg.literal_spiral { far } else { far && coeffs.switch < T::lit(0.5) };
                let partner =
                    if needs_partner { whales[rng.random_range(0..n)].clone() } else { best.clone() };
                let moved = if cfg.literal_spiral {
                    // The encircling/exploration result is overwritten unconditionally.
                    woa_spiral_update(&whales[i], &best, coeffs.l, cfg.spiral_b)
                } else {
                    woa_position_update(&whales[i], &best, &partner, &coeffs, cfg.spiral_b)
                };
                let next = match moved.and_then(|p| space.clip(&p)) {
                    Ok(p) => p,
                    Err(e) => return Err(tracker.fail(e)),
                };
                if let Err(e) = tracker.evaluate(t + 1, &next) {
                    return Err(tracker.fail(e));
                }
                whales[i] = next;
            }
        }
        tracker.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;

    fn pos(v: &[f64]) -> Position<f64> {
        Position::new(v.to_vec())
    }

    #[test]
    fn schedule_endpoints() {
        assert_eq!(decay_schedule::<f64>(0, 10), 2.0);
        assert_eq!(decay_schedule::<f64>(9, 10), 0.0);
        assert_eq!(decay_schedule::<f64>(0, 1), 2.0);
        let c = WoaCoefficients::from_draws(decay_schedule::<f64>(0, 10), 1.0, 0.5, 0.0, 0.0);
        assert_eq!((c.a, c.big_a, c.big_c), (2.0, 2.0, 1.0));
    }

    #[test]
    fn a_coefficient_vanishes_at_midpoint_draw_or_final_iteration() {
        for a in [0.0, 0.3, 1.0, 2.0] {
            assert_eq!(WoaCoefficients::from_draws(a, 0.5, 0.0, 0.0, 0.0).big_a, 0.0);
        }
        let a = decay_schedule::<f64>(4, 5);
        for r in [0.0, 0.25, 1.0] {
            assert_eq!(WoaCoefficients::from_draws(a, r, 0.0, 0.0, 0.0).big_a.abs(), 0.0);
        }
    }

    #[test]
    fn drawn_coefficients_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..20 {
            let c: WoaCoefficients<f64> = woa_coefficients(t, 20, &mut rng);
            assert!(c.big_a.abs() <= c.a + 1e-15);
            assert!((0.0..=2.0).contains(&c.big_c));
            assert!((-1.0..=1.0).contains(&c.l));
            assert!((0.0..1.0).contains(&c.switch));
        }
    }

    #[test]
    fn encircling_with_zero_step_lands_on_best() {
        let c = WoaCoefficients { a: 0.0, big_a: 0.0, big_c: 1.3, l: 0.2, switch: 0.1 };
        let out =
            woa_position_update(&pos(&[3.0, -1.0]), &pos(&[5.0, 2.0]), &pos(&[9.0, 9.0]), &c, 1.0).unwrap();
        assert_eq!(out, pos(&[5.0, 2.0]));
    }

    #[test]
    fn encircling_substitution() {
        let c = WoaCoefficients { a: 1.0, big_a: 0.5, big_c: 1.0, l: 0.0, switch: 0.2 };
        let out = woa_position_update(&pos(&[3.0]), &pos(&[5.0]), &pos(&[0.0]), &c, 1.0).unwrap();
        assert!((out.coords()[0] - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn exploration_uses_random_whale() {
        let c = WoaCoefficients { a: 2.0, big_a: 1.5, big_c: 1.0, l: 0.0, switch: 0.2 };
        let out = woa_position_update(&pos(&[3.0]), &pos(&[5.0]), &pos(&[1.0]), &c, 1.0).unwrap();
        // 1 − 1.5·|1 − 3|
        assert!((out.coords()[0] + 2.0).abs() <= 1e-12);
    }

    #[test]
    fn spiral_substitution() {
        let c = WoaCoefficients { a: 1.0, big_a: 0.1, big_c: 1.0, l: 0.0, switch: 0.7 };
        let out = woa_position_update(&pos(&[3.0]), &pos(&[5.0]), &pos(&[0.0]), &c, 1.0).unwrap();
        assert!((out.coords()[0] - 7.0).abs() <= 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let c = WoaCoefficients { a: 1.0, big_a: 0.1, big_c: 1.0, l: 0.0, switch: 0.7 };
        assert!(woa_position_update(&pos(&[3.0]), &pos(&[5.0, 1.0]), &pos(&[0.0]), &c, 1.0).is_err());
    }

    #[test]
    fn default_budgets_spend_fifty_five_evaluations() {
        let space = SearchSpace::<f64>::cnn_default();
        let obj = FnObjective::new("sum", |x: &[f64]| x.iter().sum());
        let res = Woa::new(WoaConfig::default()).unwrap().run(&space, &obj).unwrap();
        assert_eq!(res.evaluations, 55);
    }

    #[test]
    fn constant_objective_keeps_initial_best() {
        let space = SearchSpace::<f64>::cnn_default();
        let obj = FnObjective::new("flat", |_: &[f64]| 0.25);
        let res = Woa::new(WoaConfig::default()).unwrap().run(&space, &obj).unwrap();
        assert_eq!(res.best_position, res.trace.records()[0].position);
    }

    #[test]
    fn literal_spiral_mode_runs_and_differs() {
        let space = SearchSpace::<f64>::uniform_box(3, -5.0, 5.0).unwrap();
        let obj = FnObjective::new("sphere", |x: &[f64]| x.iter().map(|v| v * v).sum());
        let canon =
            Woa::new(WoaConfig { seed: 4, ..WoaConfig::default() }).unwrap().run(&space, &obj).unwrap();
        let literal = Woa::new(WoaConfig { seed: 4, literal_spiral: true, ..WoaConfig::default() })
            .unwrap()
            .run(&space, &obj)
            .unwrap();
        assert_eq!(literal.evaluations, 55);
        assert_ne!(canon.trace, literal.trace);
    }
}
