use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qualgate", version, about = "Quality-gated dataset curation with no-reference image quality metrics")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Only print errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    /// Echo every parameter in effect (bandwidths, thresholds, seeds).
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every image in a directory with the chosen methods.
    Score(ScoreArgs),
    /// Correlate method scores with crop, rotation and blur steps.
    Bench(BenchArgs),
    /// Rank methods from a bench report and pick the voting set.
    Select(SelectArgs),
    /// Derive per-method cut-offs from a prediction log.
    Cutoff(CutoffArgs),
    /// Majority-vote every dataset image against the cut-offs.
    Filter(FilterArgs),
    /// Build a size-matched random subset or a percent-removed series.
    Subset(SubsetArgs),
    /// Summarize bench, cut-off and subset artifacts.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// SVR model JSON for brisque.
    #[arg(long)]
    pub brisque_model: Option<PathBuf>,
    /// Pristine model JSON for niqe.
    #[arg(long, conflicts_with = "niqe_pristine")]
    pub niqe_model: Option<PathBuf>,
    /// Directory of sharp images to fit the niqe pristine model from.
    #[arg(long)]
    pub niqe_pristine: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Comma-separated method ids.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Output score CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// External score CSV (`image_id,method,raw_score`); repeatable.
    #[arg(long)]
    pub external: Vec<PathBuf>,
    #[command(flatten)]
    pub models: ModelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Output directory for table.csv and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub blur_sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rotation_angles: Vec<f64>,
    #[command(flatten)]
    pub models: ModelArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatisticArg {
    Pcc,
    Srcc,
    MeanOfBoth,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// report.json written by `bench` (or its directory).
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_crop: Option<f64>,
    #[arg(long)]
    pub max_rot: Option<f64>,
    #[arg(long)]
    pub min_blur: Option<f64>,
    #[arg(long)]
    pub target_count: Option<usize>,
    #[arg(long, value_enum)]
    pub statistic: Option<StatisticArg>,
    /// Force methods into the voting set.
    #[arg(long, value_delimiter = ',')]
    pub include: Vec<String>,
    /// Remove methods from the voting set.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Raw,
    Minmax,
}

#[derive(Debug, Args)]
pub struct CutoffArgs {
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Force one score space for every method.
    #[arg(long, value_enum)]
    pub score_space: Option<SpaceArg>,
    /// Fall back to an incorrect-class quantile when curves do not cross.
    #[arg(long)]
    pub fallback: bool,
    #[arg(long)]
    pub fallback_quantile: Option<f64>,
    /// Also write the density curves for plotting.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub cutoffs: Option<PathBuf>,
    /// Output directory for the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vote only with these cut-offs.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value = "high_quality")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetMode {
    Matched,
    PercentSeries,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolArg {
    Redraw,
    Shared,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    #[arg(long, value_enum)]
    pub mode: SubsetMode,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Subset size (matched mode).
    #[arg(long, conflicts_with = "match_manifest")]
    pub n: Option<usize>,
    /// Take the size from an existing manifest JSON (matched mode).
    #[arg(long = "match")]
    pub match_manifest: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub percents: Vec<u32>,
    #[arg(long)]
    pub target_n: Option<usize>,
    #[arg(long, value_enum)]
    pub pool_mode: Option<PoolArg>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Bench output directory or its report.json.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    #[arg(long)]
    pub cutoffs: Option<PathBuf>,
    /// Subset manifest JSON; repeatable.
    #[arg(long)]
    pub subset: Vec<PathBuf>,
    /// Also write the summary as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}
