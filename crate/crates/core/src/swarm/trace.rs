//! Per-evaluation convergence log and its CSV form.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::{format_sig17, Scalar};
use crate::space::{HyperParams, ParamKind, Position, SearchSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    /// 1-based evaluation counter.
    pub evaluation: usize,
    /// 0 for the initial population, then 1..=iterations.
    pub iteration: usize,
    /// The clipped position that was evaluated.
    pub position: Position<T>,
    /// Decoded parameter values (integers rounded).
    pub candidate: Vec<T>,
    pub fitness: T,
    pub best_so_far: T,
    /// Set when the objective substituted a worst-case fitness (e.g. divergence).
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    names: Vec<String>,
    kinds: Vec<ParamKind>,
    records: Vec<TraceRecord<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn new(space: &SearchSpace<T>) -> Self {
        Self {
            names: space.params().iter().map(|p| p.name().to_string()).collect(),
            kinds: space.params().iter().map(|p| p.kind()).collect(),
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[TraceRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn push(&mut self, record: TraceRecord<T>) {
        self.records.push(record);
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["evaluation".to_string(), "iteration".to_string()];
        cols.extend(self.names.iter().cloned());
        cols.push("fitness".into());
        cols.push("best_so_far".into());
        cols.join(",")
    }

    /// Writes one row per evaluation. Integer parameters print as whole
    /// numbers, every real with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for r in &self.records {
            write!(w, "{},{}", r.evaluation, r.iteration)?;
            for (v, kind) in r.candidate.iter().zip(&self.kinds) {
                match kind {
                    ParamKind::Integer => write!(w, ",{}", v.to_f64_lossy() as i64)?,
                    ParamKind::Continuous => write!(w, ",{}", format_sig17(v.to_f64_lossy()))?,
                }
            }
            writeln!(
                w,
                ",{},{}",
                format_sig17(r.fitness.to_f64_lossy()),
                format_sig17(r.best_so_far.to_f64_lossy())
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Best solution and full history of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizationResult<T> {
    pub best_position: Position<T>,
    pub best_values: Vec<T>,
    /// Present when the space holds the four CNN hyperparameters.
    pub best_hyperparams: Option<HyperParams<T>>,
    pub best_fitness: T,
    pub trace: Trace<T>,
    pub evaluations: usize,
}

/// An objective failure mid-run, with everything evaluated before it.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub error: Error,
    pub partial: Trace<T>,
}

impl<T> fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "objective failed after {} evaluations: {}", self.partial_len(), self.error)
    }
}

impl<T> RunFailure<T> {
    fn partial_len(&self) -> usize {
        self.partial.records.len()
    }
}

impl<T: fmt::Debug> std::error::Error for RunFailure<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// A trace CSV read back as plain numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub param_names: Vec<String>,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub evaluation: usize,
    pub iteration: usize,
    pub values: Vec<f64>,
    pub fitness: f64,
    pub best_so_far: f64,
}

impl TraceTable {
    pub fn parse<R: BufRead>(reader: R, source: &std::path::Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(perr(1, "empty trace file".into())),
        };
        let cols: Vec<&str> = header.trim().split(',').collect();
        let n = cols.len();
        if n < 4
            || cols[0] != "evaluation"
            || cols[1] != "iteration"
            || cols[n - 2] != "fitness"
            || cols[n - 1] != "best_so_far"
        {
            return Err(perr(1, format!("unexpected trace header `{header}`")));
        }
        let param_names = cols[2..n - 2].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != n {
                return Err(perr(lineno, format!("expected {n} fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| perr(lineno, format!("`{s}` is not a number")));
            let int =
                |s: &str| s.parse::<usize>().map_err(|_| perr(lineno, format!("`{s}` is not a counter")));
            rows.push(TraceRow {
                evaluation: int(fields[0])?,
                iteration: int(fields[1])?,
                values: fields[2..n - 2].iter().map(|s| num(s)).collect::<Result<_>>()?,
                fitness: num(fields[n - 2])?,
                best_so_far: num(fields[n - 1])?,
            });
        }
        Ok(Self { param_names, rows })
    }

    /// Running minimum of `fitness`, recomputed from scratch.
    pub fn recomputed_best(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.rows
            .iter()
            .map(|r| {
                if r.fitness < best {
                    best = r.fitness;
                }
                best
            })
            .collect()
    }

    pub fn best_is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far)
    }
}
