use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmcnn::experiment::{self, ExperimentConfig};
use swarmcnn::{Error, HyperParams64, Position64};

#[derive(Parser)]
#[command(name = "swarmcnn", version, about = "Swarm-based CNN hyperparameter search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured optimizer(s) and write traces, best candidates and reports.
    Optimize {
        config: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
        /// Give both optimizers the evaluation budget of the larger one.
        #[arg(long)]
        equal_budget: bool,
        /// Always take the spiral branch in the whale update.
        #[arg(long)]
        woa_literal_spiral: bool,
    },
    /// Train and evaluate one explicit hyperparameter set without search.
    Train {
        config: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        num_filters: Option<f64>,
        #[arg(long)]
        dense_units: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Write a synthetic four-class soil dataset as PPM class directories.
    GenData {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        /// Image size as HxW.
        #[arg(long, default_value = "32x32")]
        size: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Recompute the best-so-far curve of a trace CSV.
    Report {
        trace: PathBuf,
        /// Write the curve CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonFlags {
    /// Override the top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidSpace(_) | Error::Domain { .. } => 2,
        _ => 1,
    }
}

fn load_config(path: &Path, common: &CommonFlags) -> swarmcnn::Result<ExperimentConfig<f64>> {
    let mut config = experiment::parse_config::<f64>(path)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn optimize(config: &Path, common: &CommonFlags, equal_budget: bool, literal: bool) -> swarmcnn::Result<()> {
    let mut config = load_config(config, common)?;
    config.equal_budget |= equal_budget;
    config.woa.literal_spiral |= literal;
    let summary = experiment::run_experiment(&config)?;
    print!("{}", summary.report);
    println!("artifacts written to {}", summary.output_dir.display());
    Ok(())
}

fn train(config: &Path, common: &CommonFlags, overrides: [Option<f64>; 4]) -> swarmcnn::Result<()> {
    let config = load_config(config, common)?;
    config.validate()?;
    let space = &config.space;
    if !space.is_hyperparameter_space() {
        return Err(Error::Config("`train` needs the four CNN hyperparameters in the search space".into()));
    }
    let names = [
        swarmcnn::space::NUM_FILTERS,
        swarmcnn::space::DENSE_UNITS,
        swarmcnn::space::DROPOUT_RATE,
        swarmcnn::space::LEARNING_RATE,
    ];
    // Unset values fall back to the middle of their configured range.
    let mut coords: Vec<f64> = space.params().iter().map(|p| 0.5 * (p.lower() + p.upper())).collect();
    for (name, value) in names.iter().zip(overrides) {
        if let Some(v) = value {
            let (i, _) = space.param(name).expect("checked above");
            coords[i] = v;
        }
    }
    let hp: HyperParams64 = space.decode(&Position64::new(coords))?;
    eprintln!(
        "training num_filters={} dense_units={} dropout_rate={} learning_rate={}",
        hp.num_filters, hp.dense_units, hp.dropout_rate, hp.learning_rate
    );
    let (_, report) = experiment::run_training(&config, &hp)?;
    print!("{report}");
    println!("artifacts written to {}", config.output_dir.display());
    Ok(())
}

fn gen_data(out: &Path, per_class: usize, size: &str, seed: u64) -> swarmcnn::Result<()> {
    let (h, w) = experiment::parse_size(size)
        .ok_or_else(|| Error::Config(format!("--size expects HxW, got `{size}`")))?;
    let ds = experiment::generate_data(out, per_class, h, w, seed)?;
    println!("wrote {} images in {} classes to {}", ds.len(), ds.num_classes(), out.display());
    Ok(())
}

fn report(trace: &Path, out: Option<&Path>) -> swarmcnn::Result<()> {
    let (csv, summary) = experiment::summarize_trace(trace)?;
    match out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    eprint!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Optimize { config, common, equal_budget, woa_literal_spiral } => {
            optimize(config, common, *equal_budget, *woa_literal_spiral)
        }
        Command::Train { config, common, num_filters, dense_units, dropout, learning_rate } => {
            train(config, common, [*num_filters, *dense_units, *dropout, *learning_rate])
        }
        Command::GenData { out_dir, per_class, size, seed } => gen_data(out_dir, *per_class, size, *seed),
        Command::Report { trace, out } => report(trace, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
