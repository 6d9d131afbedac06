use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::warn;

use spikebench::bench::{
    aggregate, emit_report, read_journal, render_report, run_experiment_with, ExperimentConfig,
    ReportFormat, RunMode, RunOptions,
};
use spikebench::complexity::ComplexityResult;
use spikebench::learning::RuleKind;
use spikebench::neuron::LifParams;
use spikebench::pipeline::{
    evaluate, load_model, output_complexity, predict_dataset, save_model, train, TrainConfig,
};
use spikebench::rng::{derive_seed, stream};
use spikebench::sources::{make_dataset, SourceFamily};
use spikebench::BinarySequence;

/// Learning-rule benchmark for LIF spiking networks classified by the
/// Lempel-Ziv complexity of their output.
#[derive(Parser)]
#[command(name = "spikebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment sweeps and build reports.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Print the LZ76 phrase count and normalized complexity of a bit file.
    Complexity {
        #[arg(long)]
        bits: PathBuf,
    },
    /// Train one network on a source family's default class pair.
    Train(TrainArgs),
    /// Classify a bit file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bits: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run a sweep described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Single seed regardless of the configured mode.
        #[arg(long)]
        fast: bool,
        /// Continue an interrupted sweep from this journal.
        #[arg(long, value_name = "JOURNAL")]
        resume: Option<PathBuf>,
        /// Also write the report here, in the format given by --format.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Aggregate a journal into a report.
    Report {
        #[arg(long = "in", value_name = "JOURNAL")]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
        /// Write a header-only report when the journal has no successful runs.
        #[arg(long)]
        allow_empty: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    rule: RuleKind,
    #[arg(long)]
    source: SourceFamily,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    save: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 1024)]
    length: usize,
}

fn read_bits(path: &Path) -> Result<BinarySequence> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse()
        .with_context(|| format!("parsing bits from {}", path.display()))
}

fn bench_run(
    config: &Path,
    fast: bool,
    resume: Option<PathBuf>,
    out: Option<PathBuf>,
    format: ReportFormat,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if fast {
        cfg.mode = RunMode::Fast;
    }
    let opts = RunOptions {
        resume: resume.is_some(),
        journal: Some(resume.unwrap_or_else(|| cfg.output.clone())),
    };
    let report = run_experiment_with(&cfg, &opts)?;
    for f in &report.failures {
        warn!("failed: {} seed {}: {}", f.cell, f.seed, f.error);
    }
    match out {
        Some(path) => emit_report(&report, format, &path, true)?,
        None => {
            let best = spikebench::bench::BenchmarkReport {
                rows: report.best.clone(),
                ..report.clone()
            };
            print!("{}", render_report(&best, ReportFormat::Markdown)?);
        }
    }
    eprintln!(
        "{} rows, {} failed runs; journal: {}",
        report.rows.len(),
        report.failures.len(),
        opts.journal.as_ref().expect("journal is always set").display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (class0, class1) = a.source.default_pair();
    let train_set = make_dataset(
        class0,
        class1,
        a.per_class,
        a.length,
        derive_seed(a.seed, stream::TRAIN_SET, 0),
    )?;
    let test_set = make_dataset(
        class0,
        class1,
        a.per_class,
        a.length,
        derive_seed(a.seed, stream::TEST_SET, 0),
    )?;
    let mut rule = a.rule.default_config();
    if let Some(lr) = a.learning_rate {
        rule = rule.with_learning_rate(lr);
    }
    let mut cfg = TrainConfig::new(rule, a.n, a.seed);
    cfg.epochs = a.epochs;
    let default = LifParams::default();
    cfg.lif = LifParams::from_decay(
        a.decay.unwrap_or(default.decay),
        a.threshold.unwrap_or(default.threshold),
    )?;
    let model = train(&train_set, &cfg)?;
    let preds = predict_dataset(&model.network, &model.calibration, &test_set)?;
    let m = evaluate(&preds, &test_set.labels())?;
    save_model(&a.save, &model.network, &model.calibration)?;
    println!("train_accuracy {:.2}", model.train_accuracy);
    println!("test_accuracy {:.2}", m.accuracy);
    println!("mse {:.4}", m.mse);
    println!("threshold {}", model.calibration.threshold);
    println!("swapped {}", model.calibration.swapped);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bench(BenchCommand::Run {
            config,
            fast,
            resume,
            out,
            format,
        }) => bench_run(&config, fast, resume, out, format),
        Command::Bench(BenchCommand::Report {
            input,
            format,
            out,
            allow_empty,
        }) => {
            let report = aggregate(&read_journal(&input)?);
            if report.is_empty() && !allow_empty {
                bail!("{} holds no successful runs (use --allow-empty)", input.display());
            }
            emit_report(&report, format, &out, allow_empty)?;
            Ok(())
        }
        Command::Complexity { bits } => {
            let r = ComplexityResult::of(&read_bits(&bits)?)?;
            println!("c_raw {}", r.c_raw);
            println!("c_norm {}", r.c_norm);
            Ok(())
        }
        Command::Train(args) => train_cmd(args),
        Command::Predict { model, bits } => {
            let (net, calibration) = load_model(&model)?;
            let c = output_complexity(&net, &read_bits(&bits)?)?;
            println!("label {}", calibration.classify(c));
            println!("c_norm {c}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
