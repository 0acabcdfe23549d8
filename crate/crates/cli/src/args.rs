use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "blockdl", version, about = "Description lengths and implicit priors of community-detection objectives")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Modularity,
    Infomap,
    /// Flat planted-partition code (no quality function).
    Pp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

/// Flags accepted by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, global = true, value_enum, default_value = "modularity")]
    pub method: MethodArg,
    /// Modularity resolution.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Degree-corrected description length.
    #[arg(long, global = true)]
    pub dc: bool,
    /// Uniform prior over degree sequences instead of the hierarchical one.
    #[arg(long, global = true)]
    pub flat_degree_prior: bool,
    /// Upper end of the beta search (default 1000 N).
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    /// Largest group count on the state grid (default N).
    #[arg(long, global = true)]
    pub bmax: Option<usize>,
    /// Spacing of the internal-edge axis (default max(1, E/5000)).
    #[arg(long, global = true)]
    pub ein_stride: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Independent optimizer restarts.
    #[arg(long, global = true, default_value_t = 8)]
    pub restarts: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Description length of a partition.
    Dl(DlArgs),
    /// Density of states and the description length as a function of quality.
    Dos(DosArgs),
    /// Implicit priors on group count and quality along a beta grid.
    Priors(PriorsArgs),
    /// Most probable planted states against the detectability threshold.
    Feasibility(FeasibilityArgs),
    /// Sample an optimal instance (or a plain planted-partition graph).
    Sample(SampleArgs),
    /// Maximize the quality function.
    Optimize(OptimizeArgs),
    /// Maximize modularity over a resolution grid and keep the most compressive result.
    GammaScan(GammaScanArgs),
    /// Compare methods over a corpus of networks.
    Compare(CompareArgs),
    /// Monte Carlo checks of quality fluctuations.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DlArgs {
    /// Edge list, one `u v` pair per line.
    pub edges: PathBuf,
    /// One label per line, or `node<TAB>label` pairs.
    pub partition: PathBuf,
    /// Also search negative beta.
    #[arg(long)]
    pub allow_negative_beta: bool,
    /// Drop self-loops and repeated edges instead of failing.
    #[arg(long)]
    pub permissive: bool,
}

/// Size of a synthetic ensemble, either given directly or read from a graph.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub n: Option<u64>,
    /// Mean degree; E = round(N k / 2).
    #[arg(long)]
    pub avg_k: Option<f64>,
    /// Take N, E (and degrees under --dc) from this edge list.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DosArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Report the description length minus the random-graph baseline.
    #[arg(long)]
    pub relative_to_er: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaGrid {
    /// Explicit beta/N values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub beta_over_n: Option<Vec<f64>>,
    /// Log-spaced beta/N grid: lower end.
    #[arg(long, default_value_t = 0.1)]
    pub lo: f64,
    /// Log-spaced beta/N grid: upper end.
    #[arg(long, default_value_t = 1000.0)]
    pub hi: f64,
    /// Log-spaced beta/N grid: number of points.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PriorsArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub betas: BetaGrid,
    #[arg(long, default_value_t = 50)]
    pub w_bins: usize,
    /// Also locate the jump in the most probable group count.
    #[arg(long)]
    pub transition: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeasibilityArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub betas: BetaGrid,
    /// Resolutions to scan, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5")]
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub avg_k: f64,
    /// Inverse temperature per node (quality methods).
    #[arg(long, default_value_t = 50.0)]
    pub beta_over_n: f64,
    /// Group count (pp only).
    #[arg(long)]
    pub b: Option<usize>,
    /// Internal edge count (pp only).
    #[arg(long)]
    pub e_in: Option<u64>,
    /// Writes PREFIX.edges, PREFIX.partition and PREFIX.meta.json.
    #[arg(long)]
    pub prefix: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Singletons,
    Agglomerative,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    pub edges: PathBuf,
    /// Write the best partition here (`node<TAB>label`).
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "singletons")]
    pub init: InitArg,
    #[arg(long, default_value_t = 100)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GammaScanArgs {
    pub edges: PathBuf,
    /// Resolutions, comma separated (default: 25 log-spaced values in [0.01, 100]).
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMethod {
    Modularity,
    ModularityScan,
    Infomap,
    Pp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Text file with one edge-list path per line, optionally followed by a tag.
    pub manifest: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "modularity,modularity-scan,infomap,pp")]
    pub methods: Vec<CompareMethod>,
    /// Resolutions for the scan, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Q,
    L,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Trials per modularity point.
    #[arg(long, default_value_t = 20_000)]
    pub q_trials: usize,
    /// Trials per Infomap point.
    #[arg(long, default_value_t = 200)]
    pub l_trials: usize,
    /// Fewer trials and a 4-standard-error mean tolerance instead of 3.
    #[arg(long)]
    pub quick: bool,
}
