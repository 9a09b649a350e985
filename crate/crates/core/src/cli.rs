//! Command-line front end: `synth`, `train`, `classify` and `bench`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::archive;
use crate::classifier;
use crate::datamodel::{
    generate_synthetic, load_labels, load_matrix, save_labels, save_matrix, Dataset, HyperParams,
    LearnedModel, MatrixFormat, SynthSpec, TrainStatus,
};
use crate::error::{Error, Result};
use crate::learner::{self, Coder, TrainConfig};
use crate::par::ExecMode;

#[derive(Debug, Parser)]
#[command(name = "lrsdl", version, about = "Low-rank shared dictionary learning")]
pub struct Cli {
    /// Disable data parallelism.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with class and shared structure.
    Synth(SynthArgs),
    /// Learn class and shared dictionaries.
    Train(TrainArgs),
    /// Classify samples with a trained model.
    Classify(ClassifyArgs),
    /// Compare the joint and class-by-class sparse coders.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub kc: usize,
    #[arg(long, default_value_t = 0)]
    pub k0: usize,
    /// Defaults to min(k0, dim).
    #[arg(long)]
    pub shared_rank: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Shared code magnitude relative to class codes.
    #[arg(long, default_value_t = 1.0)]
    pub shared_scale: f64,
    /// Extra samples per class written to Y_test.lmx / labels_test.csv.
    #[arg(long, default_value_t = 0)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoderArg {
    Joint,
    Sequential,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub kc: usize,
    #[arg(long, default_value_t = 0)]
    pub k0: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stored in the model as the default for classification.
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    #[arg(long, default_value_t = 100)]
    pub fista_iters: usize,
    #[arg(long, value_enum, default_value_t = CoderArg::Joint)]
    pub coder: CoderArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Defaults to the value stored in the model.
    #[arg(long)]
    pub w: Option<f64>,
    /// Output directory for predictions.csv and confusion.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Defaults to a synthetic problem with 20 classes, d = 60, 7 samples per class.
    #[arg(long, requires = "labels")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub kc: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Run the joint coder twice instead of comparing coders.
    #[arg(long, hide = true)]
    pub identical_coders: bool,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let exec = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(&a).map(|()| 0),
        Command::Train(a) => cmd_train(&a, exec),
        Command::Classify(a) => cmd_classify(&a, exec).map(|()| 0),
        Command::Bench(a) => cmd_bench(&a, exec).map(|()| 0),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::new(a.classes, a.dim, a.per_class + a.test_per_class, a.kc)
        .with_shared(a.k0, a.shared_rank.unwrap_or(a.k0.min(a.dim)))
        .with_noise(a.noise)
        .with_seed(a.seed);
    spec.shared_scale = a.shared_scale;
    let problem = generate_synthetic(&spec)?;
    create_dir(&a.out)?;
    let (train, test) = if a.test_per_class > 0 {
        let (train, test) = problem.data.split_per_class(a.per_class)?;
        (train, Some(test))
    } else {
        (problem.data, None)
    };
    save_matrix(train.y(), a.out.join("Y.lmx"), MatrixFormat::Binary)?;
    save_labels(train.labels(), a.out.join("labels.csv"))?;
    if let Some(test) = test {
        save_matrix(test.y(), a.out.join("Y_test.lmx"), MatrixFormat::Binary)?;
        save_labels(test.labels(), a.out.join("labels_test.csv"))?;
    }
    save_matrix(&problem.truth.concat(), a.out.join("D.lmx"), MatrixFormat::Binary)?;
    save_matrix(&problem.truth.shared, a.out.join("D0.lmx"), MatrixFormat::Binary)
}

fn load_dataset(data: &Path, labels: &Path) -> Result<Dataset> {
    Ok(Dataset::new(load_matrix(data)?, load_labels(labels)?)?.normalized())
}

pub fn cmd_train(a: &TrainArgs, exec: ExecMode) -> Result<i32> {
    let data = load_dataset(&a.data, &a.labels)?;
    let hyper = HyperParams {
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        eta: a.eta,
        w: a.w,
        outer_iters: a.iters,
        fista_iters: a.fista_iters,
        seed: a.seed,
        ..HyperParams::default()
    };
    let mut config = TrainConfig::new(a.kc, a.k0).with_hyper(hyper);
    config.exec = exec;
    config.coder = match a.coder {
        CoderArg::Joint => Coder::Joint,
        CoderArg::Sequential => Coder::Sequential { passes: 1 },
    };
    let model = learner::fit(&data, &config)?;
    archive::save_model(&model, &a.out)?;
    match &model.status {
        TrainStatus::Completed => {
            if let Some(last) = model.trace.last() {
                println!("objective={}", last.objective);
            }
            Ok(0)
        }
        TrainStatus::Aborted { iter, reason } => {
            eprintln!("training aborted at iteration {iter}: {reason}; partial model saved");
            Ok(3)
        }
    }
}

pub fn cmd_classify(a: &ClassifyArgs, exec: ExecMode) -> Result<()> {
    let model = archive::load_model(&a.model)?;
    let y = load_matrix(&a.data)?;
    let labels = a.labels.as_ref().map(load_labels).transpose()?;
    let w = a.w.unwrap_or(model.hyper.w);
    match labels {
        Some(labels) => {
            let ev = classifier::evaluate_labeled(&y, &labels, &model, w, exec)?;
            create_dir(&a.out)?;
            write_text(
                &a.out.join("predictions.csv"),
                &classifier::predictions_to_csv(&ev.predictions, Some(&labels)),
            )?;
            write_text(&a.out.join("confusion.csv"), &classifier::confusion_to_csv(&ev.confusion))?;
            println!("accuracy={:.4}", ev.accuracy);
        }
        None => {
            let preds = classifier::classify_batch(&y, &model, w, exec)?;
            create_dir(&a.out)?;
            write_text(&a.out.join("predictions.csv"), &classifier::predictions_to_csv(&preds, None))?;
        }
    }
    Ok(())
}

/// Synthetic workload used by `bench` when no data is given.
pub fn default_bench_data(seed: u64) -> Result<Dataset> {
    let spec = SynthSpec::new(20, 60, 7, 7).with_noise(0.05).with_seed(seed);
    Ok(generate_synthetic(&spec)?.data.normalized())
}

pub fn cmd_bench(a: &BenchArgs, exec: ExecMode) -> Result<()> {
    let data = match (&a.data, &a.labels) {
        (Some(d), Some(l)) => load_dataset(d, l)?,
        _ => default_bench_data(a.seed)?,
    };
    let hyper = HyperParams {
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        outer_iters: a.iters,
        seed: a.seed,
        ..HyperParams::default()
    };
    let mut config = TrainConfig::new(a.kc, 0).with_hyper(hyper);
    config.exec = exec;
    let second = if a.identical_coders {
        Coder::Joint
    } else {
        Coder::Sequential { passes: 1 }
    };
    let report = learner::bench_with_coders(&data, &config, Coder::Joint, second)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("joint.csv"), &learner::trace_to_csv(&report.joint.trace))?;
    write_text(&a.out.join("sequential.csv"), &learner::trace_to_csv(&report.sequential.trace))?;

    let last = |m: &LearnedModel| m.trace.last().map_or((f64::NAN, 0.0), |r| (r.objective, r.elapsed_seconds));
    let (jf, jt) = last(&report.joint);
    let (sf, st) = last(&report.sequential);
    println!("joint_final={jf} seq_final={sf} joint_time={jt:.6} seq_time={st:.6}");
    let w = config.hyper.w;
    let ja = classifier::evaluate(&data, &report.joint, w, exec)?.accuracy;
    let sa = classifier::evaluate(&data, &report.sequential, w, exec)?.accuracy;
    println!("joint_train_accuracy={ja:.4} seq_train_accuracy={sa:.4}");
    Ok(())
}
