//! `key = value` experiment files with `[section]` headers.
//!
//! ```text
//! algorithm = both          # pso | woa | both
//! seed = 42
//!
//! [search_space.num_filters]
//! kind = integer
//! lower = 8
//! upper = 32
//!
//! [pso]
//! swarm_size = 5
//!
//! [objective]
//! kind = cnn                # cnn | sphere | rastrigin | rosenbrock
//! dataset = synthetic       # or a directory of <class>/*.ppm
//!
//! [output]
//! directory = out
//! ```
//!
//! Every key is optional. Without any `search_space.*` section the four CNN
//! hyperparameters get their default ranges; with one or more, the space is
//! exactly the declared sections in file order, and the four CNN names fall
//! back to their default kind and bounds for omitted keys.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::objective::BenchmarkKind;
use crate::scalar::Scalar;
use crate::space::{ParamKind, ParamSpec, SearchSpace};
use crate::swarm::{PsoConfig, WoaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pso,
    Woa,
    Both,
}

impl Algorithm {
    pub fn selected(self) -> &'static [&'static str] {
        match self {
            Algorithm::Pso => &["pso"],
            Algorithm::Woa => &["woa"],
            Algorithm::Both => &["pso", "woa"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic { classes: usize, per_class: usize, height: usize, width: usize, seed: Option<u64> },
    Directory { path: PathBuf, height: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnSettings {
    pub dataset: DatasetSource,
    pub eval_epochs: usize,
    pub batch_size: usize,
    pub final_epochs: usize,
    pub objective_seed: Option<u64>,
}

impl Default for CnnSettings {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic {
                classes: 4,
                per_class: 50,
                height: 32,
                width: 32,
                seed: None,
            },
            eval_epochs: 5,
            batch_size: 32,
            final_epochs: 5,
            objective_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Benchmark(BenchmarkKind),
    Cnn(CnnSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub equal_budget: bool,
    pub space: SearchSpace<T>,
    /// `seed` fields here are only used when the file pins them; see
    /// [`ExperimentConfig::pso_config`].
    pub pso: PsoConfig<T>,
    pub woa: WoaConfig<T>,
    pub pso_seed: Option<u64>,
    pub woa_seed: Option<u64>,
    pub objective: ObjectiveSpec,
    pub output_dir: PathBuf,
}

impl<T: Scalar> Default for ExperimentConfig<T> {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Both,
            seed: 42,
            equal_budget: false,
            space: SearchSpace::cnn_default(),
            pso: PsoConfig::default(),
            woa: WoaConfig::default(),
            pso_seed: None,
            woa_seed: None,
            objective: ObjectiveSpec::Cnn(CnnSettings::default()),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// SplitMix64 finalizer over `seed + stream`; gives each run its own stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<T: Scalar> ExperimentConfig<T> {
    /// PSO settings with the seed resolved and budgets equalized if requested.
    pub fn pso_config(&self) -> PsoConfig<T> {
        let mut cfg = self.pso.clone();
        cfg.seed = self.pso_seed.unwrap_or_else(|| derive_seed(self.seed, 1));
        if self.equal_budget {
            cfg.iterations = iterations_for_budget(self.common_budget(), cfg.swarm_size);
        }
        cfg
    }

    pub fn woa_config(&self) -> WoaConfig<T> {
        let mut cfg = self.woa.clone();
        cfg.seed = self.woa_seed.unwrap_or_else(|| derive_seed(self.seed, 2));
        if self.equal_budget {
            cfg.iterations = iterations_for_budget(self.common_budget(), cfg.population_size);
        }
        cfg
    }

    pub fn objective_seed(&self) -> u64 {
        match &self.objective {
            ObjectiveSpec::Cnn(c) => c.objective_seed.unwrap_or_else(|| derive_seed(self.seed, 3)),
            ObjectiveSpec::Benchmark(_) => 0,
        }
    }

    /// The larger of the two configured evaluation budgets.
    fn common_budget(&self) -> usize {
        self.pso.evaluation_budget().max(self.woa.evaluation_budget())
    }

    pub fn validate(&self) -> Result<()> {
        self.pso.validate()?;
        self.woa.validate()?;
        if let ObjectiveSpec::Cnn(c) = &self.objective {
            if !self.space.is_hyperparameter_space() {
                return Err(Error::Config(
                    "objective.kind = cnn needs search_space sections for num_filters, dense_units, \
                     dropout_rate and learning_rate"
                        .into(),
                ));
            }
            let probe = self.space.clone();
            for p in probe.params() {
                let name = p.name();
                if (name == crate::space::NUM_FILTERS || name == crate::space::DENSE_UNITS)
                    && p.lower() < T::one()
                {
                    return Err(Error::Config(format!("search_space.{name}: lower must be >= 1")));
                }
                if name == crate::space::DROPOUT_RATE && (p.lower() < T::zero() || p.upper() >= T::one()) {
                    return Err(Error::Config(format!("search_space.{name}: bounds must lie in [0, 1)")));
                }
                if name == crate::space::LEARNING_RATE && p.lower() < T::zero() {
                    return Err(Error::Config(format!("search_space.{name}: lower must be >= 0")));
                }
            }
            for (field, v) in [
                ("objective.eval_epochs", c.eval_epochs),
                ("objective.batch_size", c.batch_size),
                ("objective.final_epochs", c.final_epochs),
            ] {
                if v == 0 {
                    return Err(Error::Config(format!("{field} must be at least 1")));
                }
            }
            match &c.dataset {
                DatasetSource::Directory { path, height, width } => {
                    if !path.is_dir() {
                        return Err(Error::Config(format!(
                            "objective.dataset: directory {} does not exist",
                            path.display()
                        )));
                    }
                    check_size("objective.image_size", *height, *width)?;
                }
                DatasetSource::Synthetic { classes, per_class, height, width, .. } => {
                    if !(2..=4).contains(classes) {
                        return Err(Error::Config("objective.synthetic_classes must be in 2..=4".into()));
                    }
                    if *per_class < 2 {
                        return Err(Error::Config("objective.synthetic_per_class must be at least 2".into()));
                    }
                    check_size("objective.synthetic_size", *height, *width)?;
                }
            }
        }
        Ok(())
    }
}

fn check_size(field: &str, h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 || !h.is_multiple_of(2) || !w.is_multiple_of(2) {
        return Err(Error::Config(format!("{field}: {h}x{w} must be positive and even")));
    }
    Ok(())
}

/// Smallest iteration count whose budget `size·(1+T)` reaches `budget`.
pub fn iterations_for_budget(budget: usize, size: usize) -> usize {
    (budget.div_ceil(size)).saturating_sub(1).max(1)
}

/// Parses `HxW` (also accepts `×`).
pub fn parse_size(s: &str) -> Option<(usize, usize)> {
    let (h, w) = s.split_once(['x', 'X', '×'])?;
    Some((h.trim().parse().ok()?, w.trim().parse().ok()?))
}

#[derive(Default)]
struct SpaceSection {
    name: String,
    line: usize,
    kind: Option<ParamKind>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(PartialEq)]
enum Section {
    Root,
    Space(usize),
    Pso,
    Woa,
    Objective,
    Output,
}

pub fn parse_config<T: Scalar>(path: &Path) -> Result<ExperimentConfig<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse { path: path.into(), message: format!("cannot read: {e}") })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, path, base)
}

/// Parses config text; relative dataset and output paths resolve against `base`.
pub fn parse_config_str<T: Scalar>(text: &str, source: &Path, base: &Path) -> Result<ExperimentConfig<T>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut cfg = ExperimentConfig::<T>::default();
    let mut section = Section::Root;
    let mut space_sections: Vec<SpaceSection> = Vec::new();
    let mut cnn = CnnSettings::default();
    let mut objective_kind = "cnn".to_string();
    let mut dataset_value: Option<String> = None;
    let mut synth = (4usize, 50usize, (32usize, 32usize), None::<u64>);
    let mut image_size = (32usize, 32usize);
    let mut seen_sections: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, format!("unterminated section header `{line}`")))?
                .trim();
            if seen_sections.iter().any(|s| s == name) {
                return Err(err(lineno, format!("duplicate section [{name}]")));
            }
            seen_sections.push(name.to_string());
            section = match name {
                "pso" => Section::Pso,
                "woa" => Section::Woa,
                "objective" => Section::Objective,
                "output" => Section::Output,
                _ => match name.strip_prefix("search_space.") {
                    Some(param) if !param.is_empty() => {
                        space_sections.push(SpaceSection {
                            name: param.to_string(),
                            line: lineno,
                            ..Default::default()
                        });
                        Section::Space(space_sections.len() - 1)
                    }
                    _ => return Err(err(lineno, format!("unknown section [{name}]"))),
                },
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        if value.is_empty() {
            return Err(err(lineno, format!("`{key}` has an empty value")));
        }
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(lineno, format!("`{key}`: `{v}` is not a non-negative integer")))
        };
        let seed =
            |v: &str| v.parse::<u64>().map_err(|_| err(lineno, format!("`{key}`: `{v}` is not a seed")));
        let real = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(lineno, format!("`{key}`: `{v}` is not a finite number")))
        };
        let boolean = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(err(lineno, format!("`{key}`: `{v}` is not true/false"))),
        };
        let size = |v: &str| parse_size(v).ok_or_else(|| err(lineno, format!("`{key}`: `{v}` is not HxW")));
        let unknown = |sec: &str| err(lineno, format!("unknown key `{key}` in {sec}"));

        match &section {
            Section::Root => match key {
                "algorithm" => {
                    cfg.algorithm = match value {
                        "pso" => Algorithm::Pso,
                        "woa" => Algorithm::Woa,
                        "both" => Algorithm::Both,
                        v => {
                            return Err(err(lineno, format!("algorithm must be pso, woa or both, got `{v}`")))
                        }
                    }
                }
                "seed" => cfg.seed = seed(value)?,
                "equal_budget" => cfg.equal_budget = boolean(value)?,
                _ => return Err(unknown("the top level")),
            },
            Section::Space(i) => {
                let s = &mut space_sections[*i];
                match key {
                    "kind" => s.kind = Some(value.parse().map_err(|e: Error| err(lineno, e.to_string()))?),
                    "lower" => s.lower = Some(real(value)?),
                    "upper" => s.upper = Some(real(value)?),
                    _ => return Err(unknown(&format!("[search_space.{}]", s.name))),
                }
            }
            Section::Pso => match key {
                "swarm_size" => cfg.pso.swarm_size = int(value)?,
                "iterations" => cfg.pso.iterations = int(value)?,
                "inertia" => cfg.pso.inertia_w = T::lit(real(value)?),
                "cognitive" => cfg.pso.cognitive_c1 = T::lit(real(value)?),
                "social" => cfg.pso.social_c2 = T::lit(real(value)?),
                "per_dimension_random" => cfg.pso.per_dimension_random = boolean(value)?,
                "velocity_init_scale" => cfg.pso.velocity_init_scale = T::lit(real(value)?),
                "seed" => cfg.pso_seed = Some(seed(value)?),
                _ => return Err(unknown("[pso]")),
            },
            Section::Woa => match key {
                "population_size" => cfg.woa.population_size = int(value)?,
                "iterations" => cfg.woa.iterations = int(value)?,
                "spiral_b" => cfg.woa.spiral_b = T::lit(real(value)?),
                "literal_spiral" => cfg.woa.literal_spiral = boolean(value)?,
                "seed" => cfg.woa_seed = Some(seed(value)?),
                _ => return Err(unknown("[woa]")),
            },
            Section::Objective => match key {
                "kind" => objective_kind = value.to_string(),
                "dataset" => dataset_value = Some(value.to_string()),
                "synthetic_classes" => synth.0 = int(value)?,
                "synthetic_per_class" => synth.1 = int(value)?,
                "synthetic_size" => synth.2 = size(value)?,
                "synthetic_seed" => synth.3 = Some(seed(value)?),
                "image_size" => image_size = size(value)?,
                "eval_epochs" => cnn.eval_epochs = int(value)?,
                "batch_size" => cnn.batch_size = int(value)?,
                "final_epochs" => cnn.final_epochs = int(value)?,
                "objective_seed" => cnn.objective_seed = Some(seed(value)?),
                _ => return Err(unknown("[objective]")),
            },
            Section::Output => match key {
                "directory" => cfg.output_dir = base.join(value),
                _ => return Err(unknown("[output]")),
            },
        }
    }

    if !space_sections.is_empty() {
        let defaults = SearchSpace::<T>::cnn_default();
        // Sections naming only default hyperparameters override those entries;
        // any other name makes the sections the whole space.
        let overrides_only = space_sections.iter().all(|s| defaults.param(&s.name).is_some());
        let mut params = Vec::with_capacity(space_sections.len());
        for s in space_sections {
            let fallback = defaults.param(&s.name).map(|(_, p)| p.clone());
            let missing = |what: &str| {
                err(
                    s.line,
                    format!("[search_space.{}] needs `{what}` (not a default hyperparameter)", s.name),
                )
            };
            let kind = match (s.kind, &fallback) {
                (Some(k), _) => k,
                (None, Some(p)) => p.kind(),
                (None, None) => return Err(missing("kind")),
            };
            let lower = match (s.lower, &fallback) {
                (Some(v), _) => T::lit(v),
                (None, Some(p)) => p.lower(),
                (None, None) => return Err(missing("lower")),
            };
            let upper = match (s.upper, &fallback) {
                (Some(v), _) => T::lit(v),
                (None, Some(p)) => p.upper(),
                (None, None) => return Err(missing("upper")),
            };
            let spec = ParamSpec::new(s.name.clone(), kind, lower, upper)
                .map_err(|e| Error::Config(format!("search_space.{}: {e}", s.name)))?;
            params.push(spec);
        }
        if overrides_only {
            let mut merged = defaults.params().to_vec();
            for p in params {
                let i = defaults.param(p.name()).expect("checked above").0;
                merged[i] = p;
            }
            params = merged;
        }
        cfg.space = SearchSpace::new(params)?;
    }

    cfg.objective = if objective_kind == "cnn" {
        cnn.dataset = match dataset_value.as_deref() {
            None | Some("synthetic") => DatasetSource::Synthetic {
                classes: synth.0,
                per_class: synth.1,
                height: synth.2 .0,
                width: synth.2 .1,
                seed: synth.3,
            },
            Some(dir) => {
                DatasetSource::Directory { path: base.join(dir), height: image_size.0, width: image_size.1 }
            }
        };
        ObjectiveSpec::Cnn(cnn)
    } else {
        let kind: BenchmarkKind = objective_kind
            .parse()
            .map_err(|_| Error::Config(format!("objective.kind: unknown objective `{objective_kind}`")))?;
        ObjectiveSpec::Benchmark(kind)
    };
    cfg.validate()?;
    Ok(cfg)
}
