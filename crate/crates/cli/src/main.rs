use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ensemble_projection::analysis::{Averaging, Reassign};
use ensemble_projection::evaluation::{Classifier, FeatureKind};
use ensemble_projection::{EpParams, Format, TrainOptions};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "ep",
    version,
    about = "Ensemble projection feature learning and evaluation"
)]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true, env = "EP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit an ensemble on a feature matrix and save the model.
    Fit(FitArgs),
    /// Map a feature matrix through a saved model.
    Project(ProjectArgs),
    /// Few-labels classification with the ensemble fitted on the same data.
    Ssl(SslArgs),
    /// Classification with the ensemble fitted on a separate unlabeled pool.
    Selftaught(SelfTaughtArgs),
    /// k-means purity on raw or projected features.
    Cluster(ClusterArgs),
    /// How often the k-th nearest neighbour shares the query's class.
    Observe1(Observe1Args),
    /// Majority vote of weak classifiers trained on noisy labels.
    Observe2(Observe2Args),
    /// Write a Gaussian blob dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
struct InputArgs {
    #[arg(long)]
    features: PathBuf,
    /// One class id per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// L2-normalize every input row before use.
    #[arg(long)]
    normalize: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    Paper,
    Desk,
}

#[derive(Args, Debug, Serialize)]
struct EpArgs {
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,
    /// Number of trials (projection functions).
    #[arg(long = "T")]
    trials: Option<usize>,
    /// Prototypes per trial.
    #[arg(long)]
    r: Option<usize>,
    /// Members per prototype.
    #[arg(long)]
    n: Option<usize>,
    /// Skeleton hypotheses per trial.
    #[arg(long)]
    m: Option<usize>,
    /// Inverse regularization strength of every logistic regression.
    #[arg(long)]
    c_reg: Option<f64>,
}

impl EpArgs {
    fn params(&self, seed: u64) -> EpParams {
        let base = match self.preset {
            Preset::Paper => EpParams::paper_defaults(seed),
            Preset::Desk => EpParams::desk(seed),
        };
        EpParams {
            n_trials: self.trials.unwrap_or(base.n_trials),
            n_prototypes: self.r.unwrap_or(base.n_prototypes),
            prototype_size: self.n.unwrap_or(base.prototype_size),
            n_hypotheses: self.m.unwrap_or(base.n_hypotheses),
            base_learner: self.train_options(),
            ..base
        }
    }

    fn train_options(&self) -> TrainOptions {
        match self.c_reg {
            Some(c) => TrainOptions::with_c_reg(c),
            None => TrainOptions::default(),
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ClassifierArg {
    Knn1,
    Logreg,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FeatureArg {
    Raw,
    Ep,
}

impl From<FeatureArg> for FeatureKind {
    fn from(f: FeatureArg) -> Self {
        match f {
            FeatureArg::Raw => FeatureKind::Raw,
            FeatureArg::Ep => FeatureKind::Ep,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Labelled samples per class, one experiment per value.
    #[arg(long, value_delimiter = ',')]
    per_class: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, value_enum, default_value = "logreg")]
    classifier: ClassifierArg,
    /// Neighbour count of the kNN classifier.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// L2-normalize projected features before classification.
    #[arg(long)]
    normalize_ep: bool,
}

impl EvalArgs {
    fn ladder(&self, preset: Preset) -> Vec<usize> {
        match (&self.per_class, preset) {
            (Some(v), _) => v.clone(),
            (None, Preset::Paper) => vec![1, 2, 5, 10, 20, 50, 100],
            (None, Preset::Desk) => vec![1, 2, 5, 10],
        }
    }

    fn classifier(&self, options: TrainOptions) -> Classifier {
        match self.classifier {
            ClassifierArg::Knn1 => Classifier::Knn { k: self.k },
            ClassifierArg::Logreg => Classifier::LogReg { options },
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ep: EpArgs,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ProjectArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Output matrix, written in --format.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    normalize_ep: bool,
}

#[derive(Args, Debug, Serialize)]
struct SslArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ep: EpArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, value_enum, default_value = "ep")]
    feature: FeatureArg,
    /// Output directory for the report and curve.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SelfTaughtArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Unlabeled matrix the ensemble is fitted on, in --format.
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    ep: EpArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ep: EpArgs,
    #[arg(long, value_enum, default_value = "ep")]
    feature: FeatureArg,
    /// k-means restarts; the lowest inertia wins.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Independent k-means seeds averaged in the report.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    normalize_ep: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AveragingArg {
    PerClass,
    PerImage,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::PerClass => Averaging::PerClass,
            AveragingArg::PerImage => Averaging::PerImage,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct Observe1Args {
    #[command(flatten)]
    input: InputArgs,
    /// Largest neighbour rank; capped at the sample count minus one.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, value_enum, default_value = "per-class")]
    averaging: AveragingArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReassignArg {
    /// New label drawn from all classes.
    Any,
    /// New label drawn from the other classes only.
    Other,
}

impl From<ReassignArg> for Reassign {
    fn from(r: ReassignArg) -> Self {
        match r {
            ReassignArg::Any => Reassign::AnyClass,
            ReassignArg::Other => Reassign::OtherClasses,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct Observe2Args {
    #[command(flatten)]
    input: InputArgs,
    /// Label noise rates, one curve each.
    #[arg(long, value_delimiter = ',', default_value = "0,0.4,0.8")]
    noise: Vec<f64>,
    /// Ensemble sizes at which the vote is scored.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,500")]
    t_grid: Vec<usize>,
    #[arg(long, default_value_t = 0.3)]
    subsample: f64,
    #[arg(long, value_enum, default_value = "any")]
    reassign: ReassignArg,
    #[arg(long)]
    c_reg: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 10)]
    dims: usize,
    /// Side of the cube the class centres are drawn from.
    #[arg(long, default_value_t = 10.0)]
    spread: f64,
    /// Per-coordinate standard deviation within a class.
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Output directory; receives features.<format> and labels.txt.
    #[arg(long)]
    out: PathBuf,
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    #[cfg(feature = "parallel")]
    {
        use anyhow::Context as _;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let seed = cli.seed;
    match cli.command {
        Command::Fit(a) => commands::fit(&a, seed),
        Command::Project(a) => commands::project(&a),
        Command::Ssl(a) => commands::ssl(&a, seed),
        Command::Selftaught(a) => commands::selftaught(&a, seed),
        Command::Cluster(a) => commands::cluster(&a, seed),
        Command::Observe1(a) => commands::observe1(&a, seed),
        Command::Observe2(a) => commands::observe2(&a, seed),
        Command::Synth(a) => commands::synth(&a, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
