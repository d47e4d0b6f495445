use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ensemble_vqc::commands::{self, DiagnoseKind};
use ensemble_vqc::config::{ConfigOverrides, ExperimentConfig};
use ensemble_vqc::{CliError, CliResult};

/// Hybrid quantum-classical model experiments on a statevector simulator.
///
/// Trains and compares a depth-L re-uploading circuit model against an
/// ensemble of L depth-1 circuits, and probes circuit families for barren
/// plateaus, cost concentration, and expressibility. Results are CSV; `plot`
/// turns them into SVG charts.
#[derive(Parser)]
#[command(name = "ensemble-vqc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Plain-text config file (`key = value`, `#` comments); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit
    #[arg(long)]
    dump_config: bool,
    /// Quantum layer to train: reference | ensemble
    #[arg(long)]
    model: Option<String>,
    /// Entangler topology: nn | allpairs
    #[arg(long)]
    topology: Option<String>,
    /// Qubit count; diagnostics accept grids like `2:6` or `2,4,6`
    #[arg(long)]
    nq: Option<String>,
    /// Circuit depth / ensemble size; diagnostics accept grids
    #[arg(long)]
    layers: Option<String>,
    /// Digit classes, e.g. `0,1` or `0,1,2`
    #[arg(long)]
    digits: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training subset size (0 = all matching samples)
    #[arg(long)]
    train_size: Option<usize>,
    /// Test subset size (0 = all matching samples)
    #[arg(long)]
    test_size: Option<usize>,
    /// Repetitions with seeds seed, seed+1, ...
    #[arg(long)]
    repeats: Option<usize>,
    /// Monte-Carlo sample count for diagnostics
    #[arg(long)]
    samples: Option<usize>,
    /// Diagnostic observable: local | global
    #[arg(long)]
    observable: Option<String>,
    /// Extra pre-quantum dense widths, e.g. `32,16`
    #[arg(long)]
    pre_hidden: Option<String>,
    /// Extra post-quantum dense widths
    #[arg(long)]
    post_hidden: Option<String>,
    /// Directory with the MNIST-style IDX files (default: $ENSEMBLE_VQC_DATA)
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record real per-epoch wall times (off by default so output is
    /// byte-reproducible)
    #[arg(long)]
    timing: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            model: self.model.clone(),
            topology: self.topology.clone(),
            nq: self.nq.clone(),
            layers: self.layers.clone(),
            digits: self.digits.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: self.seed,
            train_size: self.train_size,
            test_size: self.test_size,
            repeats: self.repeats,
            samples: self.samples,
            observable: self.observable.clone(),
            pre_hidden: self.pre_hidden.clone(),
            post_hidden: self.post_hidden.clone(),
            data_dir: self.data_dir.clone(),
            out: self.out.clone(),
            timing: if self.timing { Some(true) } else { None },
        }
    }

    fn resolve(&self) -> CliResult<ExperimentConfig> {
        ExperimentConfig::resolve(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and emit a per-epoch CSV
    Train {
        #[command(flatten)]
        args: ConfigArgs,
        /// Save the trained model (last repetition) as a checkpoint
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Train reference and ensemble models on identical splits and seeds,
    /// emitting per-epoch mean/min/max bands
    Compare {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Sweep a diagnostic over the (nq, layers) grid
    Diagnose {
        /// bp | concentration | expressibility | bound
        #[arg(value_enum)]
        kind: DiagnoseKind,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Verify analytic gradients against finite differences
    Gradcheck {
        #[command(flatten)]
        args: ConfigArgs,
        /// Maximum tolerated |analytic - finite difference|
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, hide = true)]
        inject_shift_error: bool,
    },
    /// Render a results CSV as an SVG chart
    Plot {
        /// Input CSV (train or compare schema)
        csv: PathBuf,
        /// Output SVG path
        out: PathBuf,
    },
}

fn emit(config: &ExperimentConfig, text: &str) -> CliResult<()> {
    match &config.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| {
                CliError::Data(ensemble_vqc::data::DataError::Io {
                    path: path.clone(),
                    source,
                })
            })?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { args, save_model } => {
            let config = args.resolve()?;
            if args.dump_config {
                print!("{}", config.dump());
                return Ok(());
            }
            let csv = commands::cmd_train(&config, save_model.as_deref())?;
            emit(&config, &csv)
        }
        Command::Compare { args } => {
            let config = args.resolve()?;
            if args.dump_config {
                print!("{}", config.dump());
                return Ok(());
            }
            let csv = commands::cmd_compare(&config)?;
            emit(&config, &csv)
        }
        Command::Diagnose { kind, args } => {
            let config = args.resolve()?;
            if args.dump_config {
                print!("{}", config.dump());
                return Ok(());
            }
            let csv = commands::cmd_diagnose(kind, &config)?;
            emit(&config, &csv)
        }
        Command::Gradcheck {
            args,
            tol,
            inject_shift_error,
        } => {
            let config = args.resolve()?;
            if args.dump_config {
                print!("{}", config.dump());
                return Ok(());
            }
            let report = commands::cmd_gradcheck(&config, tol, inject_shift_error)?;
            emit(&config, &report)
        }
        Command::Plot { csv, out } => commands::cmd_plot(&csv, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
