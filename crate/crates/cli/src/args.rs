use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "zerobelief", version, about = "Belief propagation, relational arc-consistency and their zero beliefs")]
pub struct Cli {
    /// Write the full configuration of this run as JSON.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Check a network file for structural and numerical problems.
    Validate(ValidateArgs),
    /// Run iterative belief propagation and write beliefs.
    Ibp(IbpArgs),
    /// Run relational arc-consistency on a constraint network.
    Drac(DracArgs),
    /// Write the flat constraint network of a Bayesian network.
    Flatten(FlattenArgs),
    /// Exact posteriors by variable elimination.
    Exact(ExactArgs),
    /// Compare propagation zeros and arc-consistency removals step by step.
    Compare(CompareArgs),
    /// Check every propagated zero against the exact posteriors.
    Audit(AuditArgs),
    /// Binned error report of approximate against exact beliefs.
    Report(ReportArgs),
    /// Generate a benchmark network.
    Gen(GenArgs),
    /// Run one of the batch experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct NetArgs {
    /// Bayesian network in UAI-style text format.
    #[arg(long, value_name = "FILE")]
    pub net: PathBuf,
    /// Evidence file (count, then `var value` pairs).
    #[arg(long, value_name = "FILE")]
    pub evid: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE", conflicts_with = "cn", required_unless_present = "cn")]
    pub net: Option<PathBuf>,
    /// Constraint network file.
    #[arg(long, value_name = "FILE")]
    pub cn: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub evid: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    Synchronous,
}

#[derive(Debug, Args, Serialize)]
pub struct IbpArgs {
    #[command(flatten)]
    pub net: NetArgs,
    /// `singleton`, `dual`, or a join-graph file.
    #[arg(long, default_value = "singleton")]
    pub graph: String,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "sequential")]
    pub mode: ExecMode,
    /// Stop early once no message changes by more than this.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Run every iteration even after convergence.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Beliefs CSV (stdout when absent).
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-iteration convergence log CSV.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AcMode {
    All,
    Noecho,
}

#[derive(Debug, Args, Serialize)]
pub struct DracArgs {
    /// Constraint network file.
    #[arg(long, value_name = "FILE")]
    pub cn: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub evid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub mode: AcMode,
    /// `dual` or a join-graph file.
    #[arg(long, default_value = "dual")]
    pub graph: String,
    /// Removed-tuple trace CSV (step, node, removed_tuple).
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Remaining domains CSV (stdout when absent).
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FlattenArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub net: NetArgs,
    /// Elimination order file (whitespace-separated variable ids).
    #[arg(long, value_name = "FILE")]
    pub order: Option<PathBuf>,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Topological,
    ById,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value = "singleton")]
    pub graph: String,
    #[arg(long, value_enum, default_value = "topological")]
    pub schedule: ScheduleKind,
    /// Per-step trace CSV (stdout when absent).
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value = "singleton")]
    pub graph: String,
    /// Iterations to run (default: the settling bound plus one).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Count underflow zeros as violations too.
    #[arg(long)]
    pub strict: bool,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Exact beliefs CSV (as written by `exact`).
    #[arg(long, value_name = "FILE")]
    pub exact: PathBuf,
    /// Approximate beliefs CSV (as written by `ibp`).
    #[arg(long, value_name = "FILE")]
    pub approx: PathBuf,
    /// Evidence file; observed variables are left out of the report.
    #[arg(long, value_name = "FILE")]
    pub evid: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
    /// Only the bins below one half.
    #[arg(long)]
    pub half: bool,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenFamily {
    Coloring,
    Coding,
    Grid,
    Random,
    Fixture,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: GenFamily,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output path prefix; `.uai`, `.evid`, `.truth`, `.cn` and `.json` are appended.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
    /// Fixture name (family `fixture`).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub n_x: usize,
    #[arg(long, default_value_t = 40)]
    pub n_h: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 10)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub parents_per_bit: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub cols: usize,
    #[arg(long, default_value_t = 80)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub max_parents: usize,
    /// Number of observed leaves (grid, random).
    #[arg(long, default_value_t = 0)]
    pub evidence: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    pub which: Experiment,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum Experiment {
    /// Mean absolute error of propagation on coloring-type networks.
    Table1(Table1Args),
    /// Binned recall and precision errors for one benchmark family.
    Intervals(IntervalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Table1Args {
    #[arg(long, default_value_t = 20)]
    pub n_x: usize,
    #[arg(long, value_delimiter = ',', default_value = "40,60,80")]
    pub n_h: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2")]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalFamily {
    Coding,
    Grid,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct IntervalArgs {
    #[arg(long, value_enum)]
    pub family: IntervalFamily,
    /// Noise levels (coding) or evidence fractions (grid, random).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 10)]
    pub width: usize,
    #[arg(long, default_value_t = 10)]
    pub grid_side: usize,
    #[arg(long, default_value_t = 80)]
    pub random_n: usize,
    /// Per-bin CSV (stdout when absent).
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-level summary CSV (instances, mean error, bit error rates).
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}
