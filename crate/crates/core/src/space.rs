//! Box-bounded search spaces over mixed integer/continuous parameters.
//!
//! Optimizers move through the space as plain real vectors ([`Position`]).
//! Integer parameters stay relaxed to reals until [`SearchSpace::decode_values`]
//! rounds them, so the update equations never see a rounded coordinate.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Canonical names of the four CNN hyperparameters, in coordinate order.
pub const NUM_FILTERS: &str = "num_filters";
pub const DENSE_UNITS: &str = "dense_units";
pub const DROPOUT_RATE: &str = "dropout_rate";
pub const LEARNING_RATE: &str = "learning_rate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Integer,
    Continuous,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Integer => "integer",
            ParamKind::Continuous => "continuous",
        }
    }
}

impl std::str::FromStr for ParamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integer" => Ok(ParamKind::Integer),
            "continuous" => Ok(ParamKind::Continuous),
            other => Err(Error::Config(format!(
                "unknown parameter kind `{other}` (expected integer or continuous)"
            ))),
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One named, bounded coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec<T> {
    name: String,
    kind: ParamKind,
    lower: T,
    upper: T,
}

impl<T: Scalar> ParamSpec<T> {
    pub fn new(name: impl Into<String>, kind: ParamKind, lower: T, upper: T) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidSpace("parameter name is empty".into()));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidSpace(format!("parameter `{name}` has non-finite bounds")));
        }
        if lower > upper {
            return Err(Error::InvalidSpace(format!("parameter `{name}`: lower {lower} > upper {upper}")));
        }
        if kind == ParamKind::Integer && (lower.fract() != T::zero() || upper.fract() != T::zero()) {
            return Err(Error::InvalidSpace(format!(
                "integer parameter `{name}` needs whole-number bounds, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { name, kind, lower, upper })
    }

    pub fn integer(name: impl Into<String>, lower: T, upper: T) -> Result<Self> {
        Self::new(name, ParamKind::Integer, lower, upper)
    }

    pub fn continuous(name: impl Into<String>, lower: T, upper: T) -> Result<Self> {
        Self::new(name, ParamKind::Continuous, lower, upper)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    fn clamp(&self, x: T) -> T {
        x.max(self.lower).min(self.upper)
    }
}

/// A point in a search space, one real per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Position<T>(Vec<T>);

impl<T: Scalar> Position<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> From<Vec<T>> for Position<T> {
    fn from(v: Vec<T>) -> Self {
        Position(v)
    }
}

/// Ordered list of parameters; the order fixes every position's coordinate layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace<T> {
    params: Vec<ParamSpec<T>>,
}

impl<T: Scalar> SearchSpace<T> {
    pub fn new(params: Vec<ParamSpec<T>>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidSpace("search space has no parameters".into()));
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate parameter `{}`", p.name)));
            }
        }
        Ok(Self { params })
    }

    /// The four-parameter CNN space: filters [8, 32], dense units [32, 128],
    /// dropout [0.1, 0.5], learning rate [1e-4, 1e-2].
    pub fn cnn_default() -> Self {
        Self::new(vec![
            ParamSpec::integer(NUM_FILTERS, T::lit(8.0), T::lit(32.0)).unwrap(),
            ParamSpec::integer(DENSE_UNITS, T::lit(32.0), T::lit(128.0)).unwrap(),
            ParamSpec::continuous(DROPOUT_RATE, T::lit(0.1), T::lit(0.5)).unwrap(),
            ParamSpec::continuous(LEARNING_RATE, T::lit(1e-4), T::lit(1e-2)).unwrap(),
        ])
        .unwrap()
    }

    /// `dim` continuous coordinates `x0..x{dim-1}` sharing the same bounds.
    pub fn uniform_box(dim: usize, lower: T, upper: T) -> Result<Self> {
        Self::new(
            (0..dim).map(|i| ParamSpec::continuous(format!("x{i}"), lower, upper)).collect::<Result<_>>()?,
        )
    }

    pub fn params(&self) -> &[ParamSpec<T>] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<(usize, &ParamSpec<T>)> {
        self.params.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: len });
        }
        Ok(())
    }

    /// Draws every coordinate uniformly from its bounds.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position<T> {
        Position(
            self.params
                .iter()
                .map(|p| {
                    let u = T::lit(rng.random::<f64>());
                    // Rounding in `lower + u * width` may step past `upper`.
                    (p.lower + u * p.width()).min(p.upper)
                })
                .collect(),
        )
    }

    /// Clamps every coordinate into its bounds.
    pub fn clip(&self, pos: &Position<T>) -> Result<Position<T>> {
        self.check_dim(pos.len())?;
        Ok(Position(self.params.iter().zip(&pos.0).map(|(p, &x)| p.clamp(x)).collect()))
    }

    pub fn contains(&self, pos: &Position<T>) -> bool {
        pos.len() == self.dim() && self.params.iter().zip(&pos.0).all(|(p, &x)| x >= p.lower && x <= p.upper)
    }

    /// Maps an in-bounds position to parameter values: integer coordinates are
    /// rounded to nearest (ties away from zero), continuous ones pass through.
    pub fn decode_values(&self, pos: &Position<T>) -> Result<Vec<T>> {
        self.check_dim(pos.len())?;
        self.params
            .iter()
            .zip(&pos.0)
            .map(|(p, &x)| {
                if !(x >= p.lower && x <= p.upper) {
                    return Err(Error::Domain {
                        param: p.name.clone(),
                        value: x.to_f64_lossy(),
                        lower: p.lower.to_f64_lossy(),
                        upper: p.upper.to_f64_lossy(),
                    });
                }
                Ok(match p.kind {
                    ParamKind::Integer => x.round(),
                    ParamKind::Continuous => x,
                })
            })
            .collect()
    }

    /// Decodes into the typed CNN hyperparameters. The space must contain the
    /// four named parameters (any order, extras ignored).
    pub fn decode(&self, pos: &Position<T>) -> Result<HyperParams<T>> {
        let values = self.decode_values(pos)?;
        HyperParams::from_values(self, &values)
    }

    /// Inverse of [`decode`](Self::decode) for spaces holding exactly the four
    /// hyperparameters.
    pub fn encode(&self, hp: &HyperParams<T>) -> Result<Position<T>> {
        self.params
            .iter()
            .map(|p| {
                hp.get(&p.name)
                    .ok_or_else(|| Error::InvalidSpace(format!("`{}` is not a CNN hyperparameter", p.name)))
            })
            .collect::<Result<Vec<_>>>()
            .map(Position)
    }

    pub fn is_hyperparameter_space(&self) -> bool {
        [NUM_FILTERS, DENSE_UNITS, DROPOUT_RATE, LEARNING_RATE].iter().all(|n| self.param(n).is_some())
    }
}

/// Decoded CNN hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams<T> {
    pub num_filters: usize,
    pub dense_units: usize,
    pub dropout_rate: T,
    pub learning_rate: T,
}

impl<T: Scalar> HyperParams<T> {
    fn from_values(space: &SearchSpace<T>, values: &[T]) -> Result<Self> {
        let lookup = |name: &str| {
            space
                .param(name)
                .map(|(i, _)| values[i])
                .ok_or_else(|| Error::InvalidSpace(format!("search space lacks hyperparameter `{name}`")))
        };
        let count = |name: &str| -> Result<usize> {
            let v = lookup(name)?;
            if v < T::one() {
                return Err(Error::Domain {
                    param: name.to_string(),
                    value: v.to_f64_lossy(),
                    lower: 1.0,
                    upper: f64::INFINITY,
                });
            }
            Ok(v.to_usize().expect("positive whole number"))
        };
        let hp = Self {
            num_filters: count(NUM_FILTERS)?,
            dense_units: count(DENSE_UNITS)?,
            dropout_rate: lookup(DROPOUT_RATE)?,
            learning_rate: lookup(LEARNING_RATE)?,
        };
        if !(hp.dropout_rate >= T::zero() && hp.dropout_rate < T::one()) {
            return Err(Error::Domain {
                param: DROPOUT_RATE.into(),
                value: hp.dropout_rate.to_f64_lossy(),
                lower: 0.0,
                upper: 1.0,
            });
        }
        if hp.learning_rate.is_nan() || hp.learning_rate < T::zero() {
            return Err(Error::Domain {
                param: LEARNING_RATE.into(),
                value: hp.learning_rate.to_f64_lossy(),
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        Ok(hp)
    }

    pub fn get(&self, name: &str) -> Option<T> {
        match name {
            NUM_FILTERS => Some(T::from_count(self.num_filters)),
            DENSE_UNITS => Some(T::from_count(self.dense_units)),
            DROPOUT_RATE => Some(self.dropout_rate),
            LEARNING_RATE => Some(self.learning_rate),
            _ => None,
        }
    }
}
