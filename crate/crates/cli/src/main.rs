use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use featrec::interpret::{HarmonicSettings, DEFAULT_MAX_HARMONIC, DEFAULT_TOLERANCE};
use featrec::models::Metric;

mod commands;
mod config;
mod logging;

use commands::{InterpretArgs, StageError};
use config::Overrides;

#[derive(Parser)]
#[command(name = "featrec", version, about = "Interpretable feature recommendation for 1-D sensor signals")]
struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Accuracy,
    Sensitivity,
    Specificity,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Accuracy => Metric::Accuracy,
            MetricArg::Sensitivity => Metric::Sensitivity,
            MetricArg::Specificity => Metric::Specificity,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run-config JSON file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    window_size_s: Option<f64>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            tau: self.tau,
            k: self.k,
            window_size_s: self.window_size_s,
            metric: self.metric.map(Into::into),
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic tone dataset (wide CSV plus sidecar).
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build folds, escalate through the feature levels and recommend Fe1/Fe2.
    Recommend(RunArgs),
    /// Describe a finished run's features.
    Interpret {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        fundamentals: Option<PathBuf>,
        /// Expert weights; writes a rerun config.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_HARMONIC)]
        max_harmonic: u32,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Fold whose Train rows give the value ranges.
        #[arg(long, default_value_t = 0)]
        range_fold: usize,
    },
    /// PCA + SVM baseline on the raw signals, same folds as `recommend`.
    BaselinePca {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated component counts.
        #[arg(long, value_delimiter = ',')]
        components: Option<Vec<usize>>,
    },
}

fn run(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Synth { spec, seed, out } => commands::synth(&spec, seed, &out),
        Command::Recommend(args) => {
            let dir = commands::recommend_cmd(&args.config, &args.overrides())?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Interpret {
            run_dir,
            fundamentals,
            weights,
            max_harmonic,
            tolerance,
            range_fold,
        } => commands::interpret_cmd(&InterpretArgs {
            run_dir,
            fundamentals,
            weights,
            harmonics: HarmonicSettings {
                max_n: max_harmonic,
                tolerance,
            },
            range_fold,
        }),
        Command::BaselinePca { run, components } => {
            let dir = commands::baseline_pca_cmd(&run.config, &run.overrides(), components)?;
            println!("{}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logging::init(cli.verbose);
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: [config] --threads must be a positive integer");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
