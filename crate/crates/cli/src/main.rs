mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "infospec", version, about = "Frequency-to-information transformation for 1D spectra")]
pub struct Cli {
    /// Pipeline configuration (JSON). Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic spectrum library.
    Synth(SynthArgs),
    /// Train or apply a FIT model.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Correlation distances and Bayes error for raw and FIT spectra.
    Eval(EvalArgs),
    /// Train a feed-forward network on raw or FIT spectra.
    Ann(AnnArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Spectra per class, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub multiplicities: Option<Vec<usize>>,
    #[arg(long)]
    pub channels: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Train a model from a library.
    Train(FitTrainArgs),
    /// Transform a spectrum CSV or a whole library.
    Apply(FitApplyArgs),
}

#[derive(Debug, Args)]
pub struct FitOptions {
    #[arg(long)]
    pub bins: Option<usize>,
    /// `auto` or a fixed level.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Skip the normalization that precedes clipping.
    #[arg(long)]
    pub no_suppress_solvent: bool,
}

#[derive(Debug, Args)]
pub struct FitTrainArgs {
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitOptions,
}

#[derive(Debug, Args)]
pub struct FitApplyArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Spectrum CSV (`ppm,intensity`).
    #[arg(long, required_unless_present = "library", conflicts_with = "library")]
    pub spectrum: Option<PathBuf>,
    /// Library JSON; one output file per entry.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub library: Option<PathBuf>,
    /// Trained model; trained on the library when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub bayes_bins: Option<usize>,
    #[command(flatten)]
    pub fit: FitOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Features {
    Raw,
    Fit,
}

impl Features {
    pub fn name(self) -> &'static str {
        match self {
            Features::Raw => "raw",
            Features::Fit => "fit",
        }
    }
}

#[derive(Debug, Args)]
pub struct AnnArgs {
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fit")]
    pub features: Features,
    /// Resample the library to this many channels first.
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Stop once the max bit error reaches this level.
    #[arg(long)]
    pub target: Option<f64>,
    /// One training run per seed, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[command(flatten)]
    pub fit: FitOptions,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    // Panics are internal errors; the default hook still prints the message.
    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(1),
    }
}
