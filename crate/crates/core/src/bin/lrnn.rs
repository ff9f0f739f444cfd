use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrnn::cli::{self, CliError};
use lrnn::molecules::{BondEncoding, MoleculeConfig};
use lrnn::trainer::{CostKind, TrainConfig};
use lrnn::FamilyKind;

#[derive(Parser)]
#[command(name = "lrnn", version, about = "Lifted relational neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground a template against each example; write instances.csv and stats.csv.
    Ground {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        examples: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train template weights by SGD.
    Train {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        opts: TrainOpts,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        out_params: PathBuf,
        /// JSON-lines cost trace.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// k-fold cross-validation with inner selection over --lrs and --restarts.
    Xval {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        opts: TrainOpts,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
        lrs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
        restarts: Vec<usize>,
        /// Error table CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score query atoms; prints example_id,atom,score,missing.
    Predict {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Ground atom to score in every example; repeatable.
        #[arg(long = "atom")]
        atoms: Vec<String>,
        #[arg(long, default_value = "ms")]
        family: FamilyKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one DOT file per example's ground network.
    ExportDot {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value = "ms")]
        family: FamilyKind,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a balanced molecule set labeled by O-H bond presence.
    Molecules {
        #[arg(long, default_value_t = 40)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        min_atoms: usize,
        #[arg(long, default_value_t = 8)]
        max_atoms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write bonds as bond(A,B,Id) with single/double facts.
        #[arg(long)]
        ternary: bool,
        #[arg(long, default_value = "explosive")]
        target: String,
        #[arg(long)]
        out_examples: PathBuf,
        #[arg(long)]
        out_queries: PathBuf,
    },
}

#[derive(Args)]
struct Data {
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    examples: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value = "ms")]
    family: FamilyKind,
}

#[derive(Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "squared-sigmoid")]
    cost: CostKind,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    init_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    init_hi: f64,
    /// Visit examples in file order instead of a seeded shuffle.
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long)]
    freeze_offsets: bool,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            seed: self.seed,
            cost: self.cost,
            init_range: (self.init_lo, self.init_hi),
            shuffle: !self.no_shuffle,
            freeze_offsets: self.freeze_offsets,
            ..TrainConfig::default()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ground {
            template,
            examples,
            out,
        } => {
            let stats = cli::cmd_ground(&cli::GroundArgs {
                template,
                examples,
                out,
            })?;
            eprintln!("grounded {} examples", stats.len());
        }
        Command::Train {
            data,
            opts,
            lr,
            restarts,
            out_params,
            report,
        } => {
            let defaults = TrainConfig::default();
            let config = TrainConfig {
                learning_rate: lr.unwrap_or(defaults.learning_rate),
                restarts: restarts.unwrap_or(defaults.restarts),
                ..opts.config()
            };
            let summary = cli::cmd_train(&cli::TrainArgs {
                template: data.template,
                examples: data.examples,
                queries: data.queries,
                family: data.family,
                config,
                out_params,
                report,
            })?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "best restart {} cost {} training accuracy {:.4}",
                summary.best_restart, summary.best_cost, summary.accuracy
            );
        }
        Command::Xval {
            data,
            opts,
            folds,
            lrs,
            restarts,
            out,
        } => {
            let report = cli::cmd_xval(&cli::XvalArgs {
                template: data.template,
                examples: data.examples,
                queries: data.queries,
                family: data.family,
                config: cli::XvalConfig {
                    folds,
                    learning_rates: lrs,
                    restarts,
                    base: opts.config(),
                },
                out,
            })?;
            println!("mean test error {:.4}", report.mean_test_error());
        }
        Command::Predict {
            template,
            examples,
            params,
            queries,
            atoms,
            family,
            out,
        } => {
            let print = out.is_none();
            let csv = cli::cmd_predict(&cli::PredictArgs {
                template,
                params,
                examples,
                queries,
                atoms,
                family,
                out,
            })?;
            if print {
                print!("{csv}");
            }
        }
        Command::ExportDot {
            template,
            examples,
            params,
            family,
            out,
        } => {
            let files = cli::cmd_export_dot(&cli::ExportDotArgs {
                template,
                params,
                examples,
                family,
                out,
            })?;
            eprintln!("wrote {} dot files", files.len());
        }
        Command::Molecules {
            count,
            min_atoms,
            max_atoms,
            seed,
            ternary,
            target,
            out_examples,
            out_queries,
        } => {
            let n = cli::cmd_molecules(&cli::MoleculesArgs {
                config: MoleculeConfig {
                    count,
                    min_atoms,
                    max_atoms,
                    seed,
                    ..MoleculeConfig::default()
                },
                encoding: if ternary {
                    BondEncoding::Ternary
                } else {
                    BondEncoding::Binary
                },
                target,
                out_examples,
                out_queries,
            })?;
            eprintln!("wrote {n} molecules");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
