use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dnip::anneal::{DEFAULT_ALPHA, DEFAULT_LAMBDA, DEFAULT_T_MAX, DEFAULT_T_MIN};
use dnip::metrics::DEFAULT_MU;
use dnip::objective::{DEFAULT_BETA, DEFAULT_K, DEFAULT_TAU};
use dnip::{AnnealSchedule, Config, DataFormat, Terms};

#[derive(Debug, Parser)]
#[command(
    name = "dnip",
    version,
    about = "Measure and correct class-accuracy imbalance"
)]
pub struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report accuracy, COBias and PMI for a dataset, optionally reweighted.
    Evaluate(EvaluateArgs),
    /// Learn reweighting coefficients on an optimization set.
    Optimize(OptimizeArgs),
    /// Apply a learned artifact to a dataset and report metrics.
    Apply(ApplyArgs),
    /// Optimize and test all seven objective-term combinations.
    Ablate(AblateArgs),
    /// Optimize on subsamples of several sizes and aggregate over seeds.
    Sweep(SweepArgs),
    /// Compare identity, batch calibration and DNIP on a test set.
    Compare(CompareArgs),
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Export each sample's true-class probability as class,value rows.
    Density(DensityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Dataset format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub data_format: Option<DataFormat>,

    /// Rescale rows that do not sum to 1 instead of rejecting them.
    #[arg(long)]
    pub renormalize: bool,

    /// Comma-separated class names used in text output.
    #[arg(long, value_delimiter = ',')]
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ObjectiveArgs {
    #[arg(long, default_value_t = DEFAULT_BETA, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_TAU, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_MU, allow_negative_numbers = true)]
    pub mu: f64,
    /// Number of points on the weight scale.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Objective terms, e.g. "z1", "z1+z2", "z2-z3" or "all".
    #[arg(long, default_value = "all", value_parser = parse_terms)]
    pub terms: Terms,
}

impl ObjectiveArgs {
    /// All three terms enabled, ignoring `--terms`.
    pub fn base(&self) -> Config {
        Config {
            beta: self.beta,
            tau: self.tau,
            mu: self.mu,
            ..Config::default()
        }
    }

    pub fn config(&self) -> Config {
        self.base().with_terms(self.terms)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub tmax: f64,
    #[arg(long, default_value_t = DEFAULT_T_MIN)]
    pub tmin: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Chain length factor: each temperature runs ceil(lambda*N*K) proposals.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Acceptances that end a temperature early (default ceil(0.1*lambda*N*K)).
    #[arg(long)]
    pub max_accepted: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ScheduleArgs {
    pub fn schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            t_max: self.tmax,
            t_min: self.tmin,
            alpha: self.alpha,
            lambda: self.lambda,
            max_accepted: self.max_accepted,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    /// Reweight with this artifact before predicting.
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MU, allow_negative_numbers = true)]
    pub mu: f64,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    pub dataset: PathBuf,
    /// Artifact destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Trace destination (JSON lines); defaults to the artifact path with
    /// a `.trace.jsonl` extension.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Independent runs with seeds seed, seed+1, ...; the best is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: u64,
    /// Record the wall-clock time in the artifact.
    #[arg(long)]
    pub stamp_time: bool,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ApplyArgs {
    pub dataset: PathBuf,
    pub artifact: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MU, allow_negative_numbers = true)]
    pub mu: f64,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    pub optimization: PathBuf,
    pub test: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    pub optimization: PathBuf,
    pub test: PathBuf,
    /// Optimization-set sizes to try.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Seeds; each drives both the subsample and the annealer.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub optimization: PathBuf,
    pub test: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Random bias rows over `--classes` classes.
    Random,
    /// Dirichlet samples around the row-normalized four-class news-topic
    /// confusion pattern.
    NewsTopic,
    /// 5000 samples whose argmax predictions reproduce the news-topic
    /// confusion counts exactly.
    NewsTopicExact,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    pub preset: Preset,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Dirichlet concentration; higher means samples closer to the bias row.
    #[arg(long, default_value_t = 10.0)]
    pub concentration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_format)]
    pub data_format: Option<DataFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Export weighted scores without renormalizing each row.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub input: InputArgs,
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    s.parse().map_err(|e: dnip::Error| e.to_string())
}

fn parse_terms(s: &str) -> Result<Terms, String> {
    s.parse().map_err(|e: dnip::Error| e.to_string())
}
