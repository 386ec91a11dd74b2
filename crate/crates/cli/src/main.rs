//! `wavestack` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavestack_core::features::VariantId;
use wavestack_core::temporal::CompositeMethod;
use wavestack_core::wavelet::FilterName;

#[derive(Parser, Debug)]
#[command(
    name = "wavestack",
    version,
    about = "Monthly NDVI wavelet features for tile regression"
)]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "WAVESTACK_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic tiles with a known target.
    Synth(SynthArgs),
    /// Compute NDVI from a stack holding `nir` and `red` bands.
    Ndvi(NdviArgs),
    /// Reduce dated observations to twelve monthly planes.
    Monthly(MonthlyArgs),
    /// Reduce dated observations to one plane per band.
    Composite(CompositeArgs),
    /// Six wavelet summary planes from a monthly NDVI stack.
    WaveletFeatures(WaveletArgs),
    /// Tile-level feature tables.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Metrics and variant experiments.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of tiles.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tile edge in pixels.
    #[arg(long, default_value_t = 32)]
    pub tile_px: usize,
    /// Probability that a pixel-month is cloud-masked before gap filling.
    #[arg(long)]
    pub cloud_prob: Option<f64>,
    /// Also write twelve monthly Landsat composites per tile.
    #[arg(long)]
    pub monthly_landsat: bool,
    /// Displace tile centers as survey locations are displaced.
    #[arg(long)]
    pub jitter: bool,
    /// Output directory.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct NdviArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum MonthlyMethod {
    /// Mean of one year of observations.
    Mean,
    /// Month-of-year median pooled over at least three years.
    MedianMultiyear,
}

#[derive(Args, Debug)]
pub struct MonthlyArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long, default_value = "ndvi")]
    pub band: String,
    #[arg(long, value_enum, default_value_t = MonthlyMethod::Mean)]
    pub method: MonthlyMethod,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum CompositeChoice {
    Median,
    Mean,
}

impl From<CompositeChoice> for CompositeMethod {
    fn from(c: CompositeChoice) -> Self {
        match c {
            CompositeChoice::Median => CompositeMethod::Median,
            CompositeChoice::Mean => CompositeMethod::Mean,
        }
    }
}

#[derive(Args, Debug)]
pub struct CompositeArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = CompositeChoice::Median)]
    pub method: CompositeChoice,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

fn parse_filter(s: &str) -> Result<FilterName, String> {
    s.parse().map_err(|e: wavestack_core::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<VariantId, String> {
    s.parse().map_err(|e: wavestack_core::Error| e.to_string())
}

fn parse_variant_or_all(s: &str) -> Result<String, String> {
    if !s.eq_ignore_ascii_case("all") {
        parse_variant(s)?;
    }
    Ok(s.to_string())
}

#[derive(Args, Debug)]
pub struct WaveletArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// haar, db4 or dmey.
    #[arg(long, default_value = "dmey", value_parser = parse_filter)]
    pub filter: FilterName,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Also write a per-pixel CSV table.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum DatasetCommand {
    /// Reduce a tile directory to one feature row per tile.
    Build(DatasetBuildArgs),
}

#[derive(Args, Debug)]
pub struct DatasetBuildArgs {
    /// Directory written by `synth` (or laid out the same way).
    #[arg(long)]
    pub tiles: std::path::PathBuf,
    #[arg(long, value_parser = parse_variant)]
    pub variant: VariantId,
    /// Include the nighttime-light plane.
    #[arg(long)]
    pub nl: bool,
    #[arg(long, default_value = "dmey", value_parser = parse_filter)]
    pub filter: FilterName,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// R² of predictions against truth.
    R2(R2Args),
    /// Ridge experiment comparing input variants.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct R2Args {
    #[arg(long)]
    pub pred: std::path::PathBuf,
    #[arg(long)]
    pub truth: std::path::PathBuf,
    /// Prediction column; defaults to `prediction` if present, else the last column.
    #[arg(long)]
    pub pred_col: Option<String>,
    /// Truth column; defaults to `target` if present, else the last column.
    #[arg(long)]
    pub truth_col: Option<String>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Comma-separated variants, or `all` for every table row.
    #[arg(long, value_delimiter = ',', default_value = "all", value_parser = parse_variant_or_all)]
    pub variants: Vec<String>,
    /// Include the nighttime-light plane in every variant.
    #[arg(long)]
    pub nl: bool,
    /// Number of synthetic tiles (ignored with --tiles).
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub tile_px: usize,
    /// Use tiles from a directory instead of generating them.
    #[arg(long)]
    pub tiles: Option<std::path::PathBuf>,
    #[arg(long, default_value = "dmey", value_parser = parse_filter)]
    pub filter: FilterName,
    /// Ridge penalties; default 1e-3 ... 1e3 in decades.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// k-fold cross-validation instead of one 60/20/20 split.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Also report each variant with permuted targets.
    #[arg(long)]
    pub shuffled_control: bool,
    /// Directory for results.csv, results.txt and lambda_scores.csv.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.verbose);
    let threads = match cli.threads {
        Some(n) => {
            let n = usize::from(n);
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return ExitCode::from(2);
            }
            n
        }
        None => rayon::current_num_threads(),
    };
    let info = manifest::RunInfo {
        command: commands::name(&cli.command).to_string(),
        args: std::env::args().skip(1).collect(),
        threads,
    };
    match commands::run(cli.command, &info) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
