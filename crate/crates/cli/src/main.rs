//! `scanfuse`: the scan-fusion pipeline from the command line.
//!
//! Exit status is 0 on success, 1 when the data or a check fails (with a
//! JSON error report on stdout) and 2 on usage errors. The log level comes
//! from `SCANFUSE_LOG` only.

mod commands;
mod config;
mod run;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scanfuse::featsel::ShapleyMode;
use scanfuse::fusion::SortMode;
use scanfuse::metrics::LikelihoodForm;

use crate::commands::{FuseArgs, FuseMethod, Preset};
use crate::config::PipelineConfig;
use crate::run::{CliError, Run};

#[derive(Parser)]
#[command(name = "scanfuse", version, about = "Scan-level fusion of slice confidence maps")]
struct Cli {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Global seed, split per module.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Otsu mask, foreground crop and resize every .pgm slice in a directory.
    Prep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// PCA projection followed by Shapley screening of the components.
    Select {
        /// Feature table CSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// Reuse a fitted selection.json instead of fitting one.
        #[arg(long, value_name = "FILE")]
        apply: Option<PathBuf>,
        /// Principal components to keep.
        #[arg(long)]
        components: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Sampled permutations per explained row.
        #[arg(long, conflicts_with = "exact")]
        permutations: Option<usize>,
        /// Enumerate all coalitions instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Train the boosted network ensemble on a labeled feature table.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Ensemble JSON.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Turn a feature table into a slice confidence map.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Confidence-map CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Fuse the slices of every scan into one decision.
    Fuse {
        /// Confidence-map CSV.
        #[arg(long)]
        input: PathBuf,
        /// Predictions CSV.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, alias = "mode", value_enum, default_value = "exact")]
        method: FuseMethod,
        /// Fixed λ for the grid method.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Labeled confidence map for the λ search or learned-fusion training.
        #[arg(long)]
        validation: Option<PathBuf>,
        /// Trained learned-fusion ensemble.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        sort: Option<SortArg>,
        /// Keep raw tail measures instead of dividing by the full-set measure.
        #[arg(long)]
        no_normalize: bool,
    },
    /// Score a predictions CSV against scan labels.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        /// Any CSV with scan_id and label columns.
        #[arg(long)]
        labels: PathBuf,
        /// EvalReport JSON.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        likelihood: Option<LikelihoodArg>,
    },
    /// Generate a synthetic confidence map, its labels and a feature table.
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Check classical exact fusion against subset enumeration.
    Oracle {
        /// Confidence map to check; a synthetic preset when omitted.
        #[arg(long, conflicts_with = "preset")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Report JSON.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        max_slices: Option<usize>,
    },
    /// Generate train/test splits, fuse the test split five ways and tabulate.
    Fig6 {
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
}

#[derive(Args, Default)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Boosting rounds.
    #[arg(long = "boost-components")]
    boost_components: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    penalty: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SortArg {
    Density,
    Classical,
}

#[derive(Clone, Copy, ValueEnum)]
enum LikelihoodArg {
    Multiclass,
    OneVsRest,
}

fn apply_train_flags(cfg: &mut PipelineConfig, f: &TrainFlags) {
    let t = &mut cfg.train;
    if let Some(v) = f.epochs {
        t.epochs = v;
    }
    if let Some(v) = f.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = f.boost_components {
        t.components = v;
    }
    if f.batch_size.is_some() {
        t.batch_size = f.batch_size;
    }
    if let Some(v) = f.penalty {
        t.penalty = v;
    }
}

fn configure(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), cli.seed)?;
    match &cli.command {
        Command::Prep { width, height, .. } => {
            cfg.prep.width = width.unwrap_or(cfg.prep.width);
            cfg.prep.height = height.unwrap_or(cfg.prep.height);
        }
        Command::Select { components, threshold, permutations, exact, .. } => {
            cfg.selection.pca_components = components.unwrap_or(cfg.selection.pca_components);
            cfg.selection.threshold = threshold.unwrap_or(cfg.selection.threshold);
            if *exact {
                cfg.selection.shapley = ShapleyMode::Exact;
            } else if let Some(p) = permutations {
                cfg.selection.shapley = ShapleyMode::MonteCarlo { permutations: *p };
            }
        }
        Command::Train { train, .. } | Command::Fig6 { train, .. } => apply_train_flags(&mut cfg, train),
        Command::Fuse { lambda, sort, no_normalize, .. } => {
            if lambda.is_some() {
                cfg.fusion.lambda = *lambda;
            }
            if let Some(s) = sort {
                cfg.fusion.sort = match s {
                    SortArg::Density => SortMode::Density,
                    SortArg::Classical => SortMode::Classical,
                };
            }
            if *no_normalize {
                cfg.fusion.normalize = false;
            }
        }
        Command::Eval { likelihood: Some(l), .. } => {
            cfg.eval.likelihood = match l {
                LikelihoodArg::Multiclass => LikelihoodForm::Multiclass,
                LikelihoodArg::OneVsRest => LikelihoodForm::OneVsRest,
            };
        }
        Command::Oracle { max_slices: Some(m), .. } => cfg.oracle.max_slices = *m,
        _ => {}
    }
    cfg.finalize()
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let cfg = configure(cli)?;
    match &cli.command {
        Command::Prep { input, output_dir, .. } => commands::prep(Run::new("prep", cfg), input, output_dir),
        Command::Select { input, output_dir, apply, .. } => {
            commands::select(Run::new("select", cfg), input, output_dir, apply.as_deref())
        }
        Command::Train { input, output, .. } => commands::train(Run::new("train", cfg), input, output),
        Command::Predict { model, input, output } => commands::predict(Run::new("predict", cfg), model, input, output),
        Command::Fuse { input, output, method, validation, model, .. } => commands::fuse(
            Run::new("fuse", cfg),
            FuseArgs {
                input,
                output,
                method: *method,
                validation: validation.as_deref(),
                model: model.as_deref(),
            },
        ),
        Command::Eval { predictions, labels, output, .. } => {
            commands::eval(Run::new("eval", cfg), predictions, labels, output)
        }
        Command::Synth { output_dir, preset } => commands::synth(Run::new("synth", cfg), output_dir, *preset),
        Command::Oracle { input, preset, output, .. } => {
            commands::oracle(Run::new("oracle", cfg), input.as_deref(), *preset, output.as_deref())
        }
        Command::Fig6 { output_dir, .. } => commands::fig6(Run::new("fig6", cfg), output_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCANFUSE_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(summary) => {
            print!("{summary}");
            if !summary.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
