use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, RunOutcome, Tracker};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::scalar::Scalar;
use crate::space::{Position, SearchSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig<T> {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia_w: T,
    pub cognitive_c1: T,
    pub social_c2: T,
    pub seed: u64,
    /// Draw r1, r2 per coordinate instead of once per particle.
    pub per_dimension_random: bool,
    /// Initial velocities are uniform in ±scale·(upper − lower).
    pub velocity_init_scale: T,
}

impl<T: Scalar> Default for PsoConfig<T> {
    /// Five particles, five iterations, constriction-factor constants.
    fn default() -> Self {
        Self {
            swarm_size: 5,
            iterations: 5,
            inertia_w: T::lit(0.729),
            cognitive_c1: T::lit(1.49445),
            social_c2: T::lit(1.49445),
            seed: 0,
            per_dimension_random: false,
            velocity_init_scale: T::lit(0.1),
        }
    }
}

impl<T: Scalar> PsoConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 {
            return Err(Error::Config("pso.swarm_size must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("pso.iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia_w),
            ("cognitive", self.cognitive_c1),
            ("social", self.social_c2),
            ("velocity_init_scale", self.velocity_init_scale),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Config(format!("pso.{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn evaluation_budget(&self) -> usize {
        self.swarm_size * (1 + self.iterations)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle<T> {
    pub position: Position<T>,
    pub velocity: Vec<T>,
    pub pbest: Position<T>,
    pub pbest_fitness: T,
}

/// `w·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)` with scalar draws.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity_update<T: Scalar>(
    v: &[T],
    x: &Position<T>,
    pbest: &Position<T>,
    gbest: &Position<T>,
    w: T,
    c1: T,
    c2: T,
    r1: T,
    r2: T,
) -> Result<Vec<T>> {
    let d = v.len();
    check_len(d, x.coords())?;
    check_len(d, pbest.coords())?;
    check_len(d, gbest.coords())?;
    Ok((0..d)
        .map(|i| {
            let xi = x.coords()[i];
            w * v[i] + c1 * r1 * (pbest.coords()[i] - xi) + c2 * r2 * (gbest.coords()[i] - xi)
        })
        .collect())
}

/// Same update with an independent `r1[i]`, `r2[i]` per coordinate.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity_update_per_dim<T: Scalar>(
    v: &[T],
    x: &Position<T>,
    pbest: &Position<T>,
    gbest: &Position<T>,
    w: T,
    c1: T,
    c2: T,
    r1: &[T],
    r2: &[T],
) -> Result<Vec<T>> {
    let d = v.len();
    for s in [x.coords(), pbest.coords(), gbest.coords(), r1, r2] {
        check_len(d, s)?;
    }
    Ok((0..d)
        .map(|i| {
            let xi = x.coords()[i];
            w * v[i] + c1 * r1[i] * (pbest.coords()[i] - xi) + c2 * r2[i] * (gbest.coords()[i] - xi)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct Pso<T> {
    config: PsoConfig<T>,
}

impl<T: Scalar> Pso<T> {
    pub fn new(config: PsoConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PsoConfig<T> {
        &self.config
    }

    /// Random initial swarm, then `iterations` sweeps over the particles.
    pub fn run<O: Objective<T> + ?Sized>(&self, space: &SearchSpace<T>, objective: &O) -> RunOutcome<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let scale = self.config.velocity_init_scale;
        let start: Vec<(Position<T>, Vec<T>)> = (0..self.config.swarm_size)
            .map(|_| {
                let pos = space.sample(&mut rng);
                let vel = space
                    .params()
                    .iter()
                    .map(|p| {
                        let span = scale * p.width();
                        T::lit(rng.random_range(-1.0..=1.0)) * span
                    })
                    .collect();
                (pos, vel)
            })
            .collect();
        self.run_inner(space, objective, start, &mut rng)
    }

    /// Runs from explicit initial positions and velocities (one pair per
    /// particle); `swarm_size` is taken from `start`.
    pub fn run_from<O: Objective<T> + ?Sized>(
        &self,
        space: &SearchSpace<T>,
        objective: &O,
        start: Vec<(Position<T>, Vec<T>)>,
    ) -> RunOutcome<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        self.run_inner(space, objective, start, &mut rng)
    }

    fn run_inner<O: Objective<T> + ?Sized>(
        &self,
        space: &SearchSpace<T>,
        objective: &O,
        start: Vec<(Position<T>, Vec<T>)>,
        rng: &mut ChaCha8Rng,
    ) -> RunOutcome<T> {
        let cfg = &self.config;
        let mut tracker = Tracker::new(space, objective);
        let mut swarm: Vec<Particle<T>> = Vec::with_capacity(start.len());

        for (pos, vel) in start {
            let checked = space
                .check_dim(pos.len())
                .and_then(|_| check_len(space.dim(), &vel))
                .and_then(|_| space.clip(&pos));
            let pos = match checked {
                Ok(p) => p,
                Err(e) => return Err(tracker.fail(e)),
            };
            let fitness = match tracker.evaluate(0, &pos) {
                Ok(f) => f,
                Err(e) => return Err(tracker.fail(e)),
            };
            swarm.push(Particle { pbest: pos.clone(), position: pos, velocity: vel, pbest_fitness: fitness });
        }
        if swarm.is_empty() {
            return Err(tracker.fail(Error::Config("swarm is empty".into())));
        }

        let d = space.dim();
        for iteration in 1..=cfg.iterations {
            for particle in swarm.iter_mut() {
                let gbest = tracker.best().0.clone();
                let velocity = if cfg.per_dimension_random {
                    let r1: Vec<T> = (0..d).map(|_| T::lit(rng.random::<f64>())).collect();
                    let r2: Vec<T> = (0..d).map(|_| T::lit(rng.random::<f64>())).collect();
                    pso_velocity_update_per_dim(
                        &particle.velocity,
                        &particle.position,
                        &particle.pbest,
                        &gbest,
                        cfg.inertia_w,
                        cfg.cognitive_c1,
                        cfg.social_c2,
                        &r1,
                        &r2,
                    )
                } else {
                    let r1 = T::lit(rng.random::<f64>());
                    let r2 = T::lit(rng.random::<f64>());
                    pso_velocity_update(
                        &particle.velocity,
                        &particle.position,
                        &particle.pbest,
                        &gbest,
                        cfg.inertia_w,
                        cfg.cognitive_c1,
                        cfg.social_c2,
                        r1,
                        r2,
                    )
                };
                let velocity = match velocity {
                    Ok(v) => v,
                    Err(e) => return Err(tracker.fail(e)),
                };
                let moved: Vec<T> =
                    particle.position.coords().iter().zip(&velocity).map(|(&x, &v)| x + v).collect();
                let position = match space.clip(&Position::new(moved)) {
                    Ok(p) => p,
                    Err(e) => return Err(tracker.fail(e)),
                };
                particle.velocity = velocity;
                particle.position = position;

                let fitness = match tracker.evaluate(iteration, &particle.position) {
                    Ok(f) => f,
                    Err(e) => return Err(tracker.fail(e)),
                };
                if fitness < particle.pbest_fitness {
                    particle.pbest = particle.position.clone();
                    particle.pbest_fitness = fitness;
                }
            }
        }
        tracker.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Benchmark, BenchmarkKind, FnObjective};

    fn pos(v: &[f64]) -> Position<f64> {
        Position::new(v.to_vec())
    }

    #[test]
    fn consensus_is_a_fixed_point() {
        let x = pos(&[1.0, -2.0, 3.0]);
        let v = pso_velocity_update(&[0.0; 3], &x, &x, &x, 0.729, 1.5, 1.5, 0.3, 0.9).unwrap();
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn hand_substitution() {
        let v =
            pso_velocity_update(&[2.0], &pos(&[0.0]), &pos(&[4.0]), &pos(&[8.0]), 0.5, 1.0, 1.0, 0.5, 0.5)
                .unwrap();
        assert!((v[0] - 7.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_draws_leave_pure_inertia() {
        let v = pso_velocity_update(
            &[1.5, -0.25],
            &pos(&[0.0, 1.0]),
            &pos(&[3.0, 3.0]),
            &pos(&[-4.0, 9.0]),
            0.7,
            2.0,
            2.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(v, vec![0.7 * 1.5, 0.7 * -0.25]);
    }

    #[test]
    fn mismatched_lengths_error() {
        let err =
            pso_velocity_update(&[0.0; 2], &pos(&[0.0]), &pos(&[0.0]), &pos(&[0.0]), 1.0, 1.0, 1.0, 0.5, 0.5)
                .unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn per_dim_matches_scalar_when_draws_agree() {
        let (x, p, g) = (pos(&[0.0, 1.0]), pos(&[2.0, -1.0]), pos(&[5.0, 5.0]));
        let a = pso_velocity_update(&[0.1, 0.2], &x, &p, &g, 0.7, 1.4, 1.6, 0.3, 0.8).unwrap();
        let b = pso_velocity_update_per_dim(&[0.1, 0.2], &x, &p, &g, 0.7, 1.4, 1.6, &[0.3, 0.3], &[0.8, 0.8])
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_budgets_spend_thirty_evaluations() {
        let space = SearchSpace::<f64>::cnn_default();
        let obj = Benchmark::new(BenchmarkKind::Sphere);
        let res = Pso::new(PsoConfig::default()).unwrap().run(&space, &obj).unwrap();
        assert_eq!(res.evaluations, 30);
        assert_eq!(res.trace.len(), 30);
    }

    #[test]
    fn flat_landscape_keeps_first_best() {
        let space = SearchSpace::<f64>::cnn_default();
        let obj = FnObjective::new("flat", |_: &[f64]| 0.7);
        let res = Pso::new(PsoConfig::default()).unwrap().run(&space, &obj).unwrap();
        assert_eq!(res.best_fitness, 0.7);
        assert!(res.trace.records().iter().all(|r| r.best_so_far == 0.7));
        assert_eq!(res.best_position, res.trace.records()[0].position);
    }

    #[test]
    fn identical_start_with_zero_velocity_never_moves() {
        let space = SearchSpace::<f64>::uniform_box(3, -5.0, 5.0).unwrap();
        let obj = FnObjective::new("flat", |_: &[f64]| 1.0);
        let start = vec![(pos(&[1.0, 2.0, -3.0]), vec![0.0; 3]); 4];
        let cfg = PsoConfig { iterations: 10, seed: 9, ..PsoConfig::default() };
        let res = Pso::new(cfg).unwrap().run_from(&space, &obj, start).unwrap();
        assert!(res.trace.records().iter().all(|r| r.position.coords() == [1.0, 2.0, -3.0]));
    }

    #[test]
    fn objective_failure_keeps_partial_trace() {
        let space = SearchSpace::<f64>::uniform_box(2, -1.0, 1.0).unwrap();
        let calls = std::cell::Cell::new(0);
        let obj = FnObjective::new("fails", |_: &[f64]| {
            calls.set(calls.get() + 1);
            if calls.get() > 7 {
                f64::NAN
            } else {
                1.0
            }
        });
        let err = Pso::new(PsoConfig::default()).unwrap().run(&space, &obj).unwrap_err();
        assert_eq!(err.partial.len(), 7);
    }

    #[test]
    fn rejects_empty_swarm() {
        let cfg = PsoConfig::<f64> { swarm_size: 0, ..PsoConfig::default() };
        assert!(Pso::new(cfg).is_err());
    }
}
