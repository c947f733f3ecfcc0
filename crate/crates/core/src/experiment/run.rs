use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{derive_seed, CnnSettings, DatasetSource, ExperimentConfig, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::metrics::{class_metrics, confusion_matrix, ClassMetrics};
use crate::objective::{Benchmark, CnnObjective, CnnObjectiveConfig, Objective};
use crate::scalar::{format_sig17, Scalar};
use crate::space::{HyperParams, ParamKind, SearchSpace};
use crate::swarm::{OptimizationResult, Pso, Trace, TraceTable, Woa};
use crate::tinycnn::{self, container, ppm, Dataset};

/// What one optimizer produced.
#[derive(Debug, Clone)]
pub struct AlgorithmOutcome<T> {
    pub algorithm: String,
    pub result: OptimizationResult<T>,
    /// Present for the CNN objective: the best candidate retrained and scored.
    pub metrics: Option<ClassMetrics<T>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary<T> {
    pub output_dir: PathBuf,
    pub outcomes: Vec<AlgorithmOutcome<T>>,
    /// Human-readable tables for standard output.
    pub report: String,
}

/// Builds (or loads) the dataset named by the CNN settings.
pub fn materialize_dataset<T: Scalar>(settings: &CnnSettings, config_seed: u64) -> Result<Dataset<T>> {
    match &settings.dataset {
        DatasetSource::Synthetic { classes, per_class, height, width, seed } => {
            tinycnn::generate_synthetic_dataset(
                *classes,
                *per_class,
                *height,
                *width,
                seed.unwrap_or(config_seed),
            )
        }
        DatasetSource::Directory { path, height, width } => tinycnn::load_dataset(path, *height, *width),
    }
}

enum BuiltObjective<T> {
    Benchmark(Benchmark),
    Cnn { objective: CnnObjective<T>, final_epochs: usize },
}

impl<T: Scalar> BuiltObjective<T> {
    fn as_dyn(&self) -> &dyn Objective<T> {
        match self {
            BuiltObjective::Benchmark(b) => b,
            BuiltObjective::Cnn { objective, .. } => objective,
        }
    }
}

fn label(algorithm: &str) -> &'static str {
    match algorithm {
        "pso" => "PSO",
        _ => "WOA",
    }
}

/// Runs every selected optimizer and writes its artifacts into
/// `config.output_dir`. Everything except `run_info.txt` is a pure function
/// of the configuration.
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig<T>) -> Result<ExperimentSummary<T>> {
    config.validate()?;
    let out = config.output_dir.clone();
    fs::create_dir_all(&out)?;
    write_run_info(config, &out)?;

    let built = match &config.objective {
        ObjectiveSpec::Benchmark(kind) => BuiltObjective::Benchmark(Benchmark::new(*kind)),
        ObjectiveSpec::Cnn(settings) => {
            let dataset = Arc::new(materialize_dataset::<T>(settings, config.seed)?);
            let objective = CnnObjective::new(CnnObjectiveConfig {
                dataset,
                eval_epochs: settings.eval_epochs,
                batch_size: settings.batch_size,
                objective_seed: config.objective_seed(),
            })?;
            BuiltObjective::Cnn { objective, final_epochs: settings.final_epochs }
        }
    };

    let mut outcomes = Vec::new();
    let mut report = String::new();
    for &alg in config.algorithm.selected() {
        log::info!("running {alg}");
        let run = match alg {
            "pso" => Pso::new(config.pso_config())?.run(&config.space, built.as_dyn()),
            _ => Woa::new(config.woa_config())?.run(&config.space, built.as_dyn()),
        };
        let result = match run {
            Ok(r) => r,
            Err(failure) => {
                write_trace(&failure.partial, &out.join(format!("trace_{alg}.csv")))?;
                return Err(Error::Input(format!(
                    "{alg} search aborted after {} evaluations (partial trace kept): {}",
                    failure.partial.len(),
                    failure.error
                )));
            }
        };
        write_trace(&result.trace, &out.join(format!("trace_{alg}.csv")))?;
        fs::write(
            out.join(format!("best_{alg}.txt")),
            render_best(alg, &config.space, &result, built.as_dyn().name()),
        )?;

        let metrics = match &built {
            BuiltObjective::Cnn { objective, final_epochs } => {
                let hp = result
                    .best_hyperparams
                    .ok_or_else(|| Error::Config("best position does not decode".into()))?;
                let cfg = objective.config();
                let (metrics, model) =
                    retrain_and_score(&hp, &cfg.dataset, *final_epochs, cfg.batch_size, cfg.objective_seed)?;
                let mut csv = Vec::new();
                metrics.write_csv(&mut csv)?;
                fs::write(out.join(format!("metrics_{alg}.csv")), csv)?;
                container::save_model(&model, &out.join(format!("model_{alg}.tcnn")))?;
                report.push_str(&metrics.render_table(&format!("{}-CNN", label(alg))));
                report.push('\n');
                Some(metrics)
            }
            BuiltObjective::Benchmark(_) => None,
        };
        let _ = writeln!(
            report,
            "{} best fitness {} after {} evaluations\n",
            label(alg),
            format_sig17(result.best_fitness.to_f64_lossy()),
            result.evaluations
        );
        outcomes.push(AlgorithmOutcome { algorithm: alg.to_string(), result, metrics });
    }

    if outcomes.len() == 2 {
        let woa = outcomes.iter().find(|o| o.algorithm == "woa").expect("both ran");
        let pso = outcomes.iter().find(|o| o.algorithm == "pso").expect("both ran");
        let (csv, table) = render_comparison(&config.space, woa, pso);
        fs::write(out.join("comparison.csv"), csv)?;
        report.push_str(&table);
    }

    Ok(ExperimentSummary { output_dir: out, outcomes, report })
}

/// Trains `hp` for `epochs`, then scores it on the test split.
pub fn retrain_and_score<T: Scalar>(
    hp: &HyperParams<T>,
    dataset: &Dataset<T>,
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> Result<(ClassMetrics<T>, tinycnn::CnnModel<T>)> {
    let (model, _) = tinycnn::train(hp, dataset, epochs, batch_size, seed)?;
    let test = dataset.test_indices();
    let (_, predictions) = tinycnn::evaluate_model(&model, dataset, test)?;
    let cm = confusion_matrix(&dataset.labels_of(test), &predictions, dataset.class_names().to_vec())?;
    Ok((class_metrics(&cm)?, model))
}

fn write_trace<T: Scalar>(trace: &Trace<T>, path: &Path) -> Result<()> {
    trace.write_csv(BufWriter::new(fs::File::create(path)?))
}

fn write_run_info<T: Scalar>(config: &ExperimentConfig<T>, out: &Path) -> Result<()> {
    let now =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut info = String::new();
    let _ = writeln!(info, "started_unix_seconds = {now}");
    let _ = writeln!(info, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(info, "algorithm = {:?}", config.algorithm);
    let _ = writeln!(info, "seed = {}", config.seed);
    let _ = writeln!(info, "pso_seed = {}", config.pso_config().seed);
    let _ = writeln!(info, "woa_seed = {}", config.woa_config().seed);
    let _ = writeln!(info, "objective_seed = {}", config.objective_seed());
    let _ = writeln!(info, "equal_budget = {}", config.equal_budget);
    fs::write(out.join("run_info.txt"), info)?;
    Ok(())
}

fn format_value<T: Scalar>(kind: ParamKind, v: T) -> String {
    match kind {
        ParamKind::Integer => format!("{}", v.to_f64_lossy() as i64),
        ParamKind::Continuous => format_sig17(v.to_f64_lossy()),
    }
}

/// Tab-separated `name  value` rows under a `Hyperparameter  Value` header.
pub fn render_best<T: Scalar>(
    alg: &str,
    space: &SearchSpace<T>,
    result: &OptimizationResult<T>,
    objective: &str,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# algorithm: {alg}, objective: {objective}, best fitness: {}",
        format_sig17(result.best_fitness.to_f64_lossy())
    );
    let _ = writeln!(s, "Hyperparameter\tValue");
    for (p, &v) in space.params().iter().zip(&result.best_values) {
        let _ = writeln!(s, "{}\t{}", p.name(), format_value(p.kind(), v));
    }
    s
}

/// Reads a `best_<alg>.txt` file back into `(name, value)` pairs.
pub fn parse_best(text: &str) -> Result<Vec<(String, f64)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && *l != "Hyperparameter\tValue")
        .map(|l| {
            let (name, value) =
                l.split_once('\t').ok_or_else(|| Error::Input(format!("malformed best-file row `{l}`")))?;
            let v = value.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad value in `{l}`")))?;
            Ok((name.to_string(), v))
        })
        .collect()
}

fn render_comparison<T: Scalar>(
    space: &SearchSpace<T>,
    woa: &AlgorithmOutcome<T>,
    pso: &AlgorithmOutcome<T>,
) -> (String, String) {
    let mut rows: Vec<(String, String, String)> = Vec::new();
    for (i, p) in space.params().iter().enumerate() {
        rows.push((
            p.name().to_string(),
            format_value(p.kind(), woa.result.best_values[i]),
            format_value(p.kind(), pso.result.best_values[i]),
        ));
    }
    let f = |v: T| format_sig17(v.to_f64_lossy());
    rows.push(("best_fitness".into(), f(woa.result.best_fitness), f(pso.result.best_fitness)));
    rows.push(("evaluations".into(), woa.result.evaluations.to_string(), pso.result.evaluations.to_string()));
    if let (Some(mw), Some(mp)) = (&woa.metrics, &pso.metrics) {
        for (k, name) in mw.class_names.iter().enumerate() {
            let (sw, sp) = (mw.per_class[k], mp.per_class[k]);
            rows.push((format!("{name}_precision"), f(sw.precision), f(sp.precision)));
            rows.push((format!("{name}_recall"), f(sw.recall), f(sp.recall)));
            rows.push((format!("{name}_f1"), f(sw.f1), f(sp.f1)));
        }
        rows.push(("accuracy".into(), f(mw.accuracy), f(mp.accuracy)));
    }

    let mut csv = String::from("quantity,woa,pso\n");
    for (q, w, p) in &rows {
        let _ = writeln!(csv, "{q},{w},{p}");
    }

    let mut table = String::new();
    let _ = writeln!(table, "Best Hyperparameters Values of WOA and PSO");
    let _ = writeln!(table, "{:<16}  {:>24}  {:>24}", "Hyperparameters", "WOA", "PSO");
    for (q, w, p) in rows.iter().take(space.dim() + 2) {
        let _ = writeln!(table, "{q:<16}  {w:>24}  {p:>24}");
    }
    (csv, table)
}

/// Trains and scores one explicit hyperparameter set; writes
/// `metrics_train.csv` and `model_train.tcnn`.
pub fn run_training<T: Scalar>(
    config: &ExperimentConfig<T>,
    hp: &HyperParams<T>,
) -> Result<(ClassMetrics<T>, String)> {
    let settings = match &config.objective {
        ObjectiveSpec::Cnn(s) => s,
        ObjectiveSpec::Benchmark(_) => {
            return Err(Error::Config("`train` needs objective.kind = cnn".into()));
        }
    };
    let dataset = materialize_dataset::<T>(settings, config.seed)?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    let (metrics, model) =
        retrain_and_score(hp, &dataset, settings.final_epochs, settings.batch_size, config.objective_seed())?;
    let mut csv = Vec::new();
    metrics.write_csv(&mut csv)?;
    fs::write(out.join("metrics_train.csv"), csv)?;
    container::save_model(&model, &out.join("model_train.tcnn"))?;
    let report = metrics.render_table("CNN");
    Ok((metrics, report))
}

/// Writes a synthetic dataset as `<out>/<class>/*.ppm` plus `dataset.tcnn`.
pub fn generate_data(
    out: &Path,
    per_class: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Dataset<f64>> {
    let dataset = tinycnn::generate_synthetic_dataset::<f64>(4, per_class, height, width, seed)?;
    fs::create_dir_all(out)?;
    ppm::write_dataset_dir(&dataset, out)?;
    container::save_dataset(&dataset, &out.join("dataset.tcnn"))?;
    Ok(dataset)
}

/// Recomputes the running best of a trace CSV. Returns the plot-ready CSV
/// (`evaluation,iteration,fitness,best_so_far`) and a text summary.
pub fn summarize_trace(path: &Path) -> Result<(String, String)> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Parse { path: path.into(), message: format!("cannot open: {e}") })?;
    let table = TraceTable::parse(std::io::BufReader::new(file), path)?;
    if table.rows.is_empty() {
        return Err(Error::Parse { path: path.into(), message: "trace has no rows".into() });
    }
    let best = table.recomputed_best();
    let mut csv = String::from("evaluation,iteration,fitness,best_so_far\n");
    for (r, b) in table.rows.iter().zip(&best) {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.evaluation,
            r.iteration,
            format_sig17(r.fitness),
            format_sig17(*b)
        );
    }
    let best_row =
        table.rows.iter().find(|r| r.fitness == *best.last().unwrap()).expect("running minimum is attained");
    let consistent = table.rows.iter().zip(&best).all(|(r, b)| r.best_so_far == *b);
    let mut summary = String::new();
    let _ = writeln!(summary, "evaluations: {}", table.rows.len());
    let _ = writeln!(summary, "iterations: {}", table.rows.iter().map(|r| r.iteration).max().unwrap_or(0));
    let _ = writeln!(summary, "best fitness: {}", format_sig17(best_row.fitness));
    let _ =
        writeln!(summary, "found at evaluation {} (iteration {})", best_row.evaluation, best_row.iteration);
    for (name, v) in table.param_names.iter().zip(&best_row.values) {
        let _ = writeln!(summary, "  {name} = {v}");
    }
    let _ = writeln!(summary, "recorded best_so_far monotone: {}", table.best_is_monotone());
    let _ = writeln!(summary, "recorded best_so_far matches recomputation: {consistent}");
    Ok((csv, summary))
}

/// Seed used for the `stream`-th independent run under `seed`.
pub fn run_seed(seed: u64, stream: u64) -> u64 {
    derive_seed(seed, stream)
}
