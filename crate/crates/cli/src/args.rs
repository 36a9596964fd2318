use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svddbw_core::data::Shape;

#[derive(Debug, Parser)]
#[command(name = "svddbw", version, about = "SVDD training, scoring and Gaussian bandwidth selection")]
pub struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with default values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write the JSON run report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic 2-D data set.
    GenData(GenDataArgs),
    /// Train one SVDD model and save it as JSON.
    Train(TrainArgs),
    /// Score rows against a saved model.
    Score(ScoreArgs),
    /// Select a bandwidth.
    Select(SelectArgs),
    /// Repeat CV or DFN selection over random draws of growing size.
    Sweep(SweepArgs),
    /// F1 of full models over a bandwidth grid.
    F1Sweep(F1SweepArgs),
    /// Time sampled training per sample size against full training.
    Timing(TimingArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Train(_) => "train",
            Command::Score(_) => "score",
            Command::Select(_) => "select",
            Command::Sweep(_) => "sweep",
            Command::F1Sweep(_) => "f1-sweep",
            Command::Timing(_) => "timing",
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Column holding class tags; excluded from the features.
    #[arg(long)]
    pub label_column: Option<String>,

    /// Tag value of the target class.
    #[arg(long, default_value = "1")]
    pub target: String,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Grid step.
    #[arg(long)]
    pub ds: Option<f64>,
}

/// Sample sizes, either absolute or as fractions of the row count.
#[derive(Debug, Args, Default)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub n_step: Option<usize>,
    #[arg(long, conflicts_with_all = ["n_min", "n_max", "n_step"])]
    pub frac_min: Option<f64>,
    #[arg(long, conflicts_with_all = ["n_min", "n_max", "n_step"])]
    pub frac_max: Option<f64>,
    #[arg(long, conflicts_with_all = ["n_min", "n_max", "n_step"])]
    pub frac_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_parser = parse_shape)]
    pub shape: Shape,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    s.parse().map_err(|e: svddbw_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Kernel bandwidth.
    #[arg(long)]
    pub s: Option<f64>,
    /// Expected outlier fraction.
    #[arg(long)]
    pub f: Option<f64>,
    /// Model JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Per-row `row,distance_sq,outlier` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Inside/outside heatmap of the model (2-D models only).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    FullPeak,
    SamplingPeak,
    Cv,
    Dfn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMethod {
    Cv,
    Dfn,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub f: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Relative tolerance of the stopping rule.
    #[arg(long)]
    pub eps_s: Option<f64>,
    /// Consecutive agreeing sample sizes needed to stop.
    #[arg(long)]
    pub u: Option<usize>,
    /// Interior knots of the smoothing spline.
    #[arg(long)]
    pub knots: Option<usize>,
    /// Draw new samples for each grid bandwidth instead of sharing them.
    #[arg(long)]
    pub per_s_streams: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Path prefix for curve and trace CSVs.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: SweepMethod,
    /// Draws per sample size.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub without_replacement: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct F1SweepArgs {
    /// Training CSV; only target rows are used when it carries labels.
    #[arg(long)]
    pub train: PathBuf,
    /// Labelled scoring CSV.
    #[arg(long)]
    pub score: PathBuf,
    #[arg(long)]
    pub label_column: String,
    #[arg(long, default_value = "1")]
    pub target: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub f: Option<f64>,
    /// `s,precision,recall,f1` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub f: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `kind,n_i,seconds` CSV.
    #[arg(long)]
    pub out: PathBuf,
}
