//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Capability-based data valuation and curriculum scheduling.
#[derive(Debug, Parser)]
#[command(name = "capcur", version, about)]
pub struct Cli {
    /// Seed override for sampling commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for run manifests.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Directory searched for default config files.
    #[arg(long, global = true, default_value = ".", env = "CAPCUR_CONFIG_DIR")]
    pub config_dir: PathBuf,

    /// Suppress non-essential stdout.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus, merge external features, write the unified file.
    Ingest(IngestArgs),
    /// Compute per-sample metric vectors.
    Score(ScoreArgs),
    /// CDF-normalize metrics into capability values.
    Normalize(NormalizeArgs),
    /// ZCA-whiten capability values and add the rank-rescaled view.
    Whiten(WhitenArgs),
    /// Correlation table of values (and metrics) against performance.
    Correlate(CorrelateArgs),
    /// Measure capability levels from scores and a performance log.
    Measure(MeasureArgs),
    /// Plan the next curriculum stage or an active-learning query.
    Plan(PlanArgs),
    /// Run the synthetic-learner laboratory.
    Simulate(SimulateArgs),
    /// Distribution or correlation report tables.
    Report(ReportArgs),
    /// Check a corpus for missing required metrics.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Feature files to merge, repeatable.
    #[arg(long)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitSplitArg {
    Train,
    Dev,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Split the empirical distributions are fitted on.
    #[arg(long, value_enum, default_value_t = FitSplitArg::Train)]
    pub fit_split: FitSplitArg,
    /// Emit only this split (default: all records).
    #[arg(long, value_enum)]
    pub only_split: Option<SplitArg>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WhitenArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Fit the transform on a different score file (e.g. the train split).
    #[arg(long)]
    pub fit_scores: Option<PathBuf>,
    #[arg(long, default_value_t = capcur_core::valuation::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Performance log.
    #[arg(long)]
    pub target: PathBuf,
    /// Metrics file for per-metric rows.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Raw,
    Rescaled,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub perf: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub stage: u32,
    #[arg(long, value_enum, default_value_t = ViewArg::Rescaled)]
    pub view: ViewArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanMode {
    Curriculum,
    Al,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Curriculum config (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train-split (curriculum) or unlabeled-pool (al) scores.
    #[arg(long)]
    pub scores: PathBuf,
    /// Capability state from `measure`.
    #[arg(long)]
    pub state: PathBuf,
    /// Previous stage manifest.
    #[arg(long)]
    pub prev: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PlanMode::Curriculum)]
    pub mode: PlanMode,
    /// Query size for --mode al.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulateMode {
    Curriculum,
    Al,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = SimulateMode::Curriculum)]
    pub mode: SimulateMode,
    /// Labeling budget per cycle for --mode al.
    #[arg(long, default_value_t = 0.05)]
    pub budget_fraction: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Distribution,
    Correlation,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum)]
    pub kind: ReportKind,
    #[arg(long)]
    pub scores: PathBuf,
    /// Performance log (distribution report only).
    #[arg(long)]
    pub perf: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ViewArg::Raw)]
    pub view: ViewArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}
