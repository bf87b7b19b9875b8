//! `bovwrec`: reconstruct images from bag-of-visual-words histograms.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bovw_recon::qap::{
    AnnealingSchedule, DEFAULT_CONVERGENCE_EPS, DEFAULT_LAMBDA, DEFAULT_MAX_GENERATIONS,
    DEFAULT_POPULATION, DEFAULT_REPLACE_PROB,
};
use bovw_recon::{Solver, SolverConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bovwrec",
    version,
    about = "Reconstruct images from bag-of-visual-words histograms"
)]
pub struct Cli {
    /// Worker threads for corpus processing and population initialization.
    /// Results do not depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Train a visual-word codebook on a directory of PGM/PPM images.
    BuildCodebook(BuildCodebookArgs),
    /// Learn adjacency and position cost tables from a directory of images.
    LearnCosts(LearnCostsArgs),
    /// Quantize one image and write its histogram.
    Extract(ExtractArgs),
    /// Recover a layout for an image or histogram and render it.
    Reconstruct(ReconstructArgs),
    /// Score a reconstruction against its original.
    Evaluate(EvaluateArgs),
    /// Reconstruct every step of a morph between two histograms.
    Morph(MorphArgs),
    /// Render the histogram that best matches a linear classifier.
    InvertClassifier(InvertArgs),
    /// Render a histogram built from caption words.
    Sentence(SentenceArgs),
    /// Re-run a command from its manifest and check that outputs match.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildCodebookArgs {
    /// Directory of training images.
    pub image_dir: PathBuf,
    /// Number of visual words (the original experiments used 8192).
    #[arg(long, default_value_t = 256)]
    pub k: usize,
    /// k-means iteration cap.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    /// Codebook file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnCostsArgs {
    /// Directory of corpus images; all must have the same size.
    pub image_dir: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// Number of neighbor offsets, (2r+1)^2 - 1.
    #[arg(long, default_value_t = 48)]
    pub m: usize,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    /// Accept an empty directory and write uniform tables for the grid given
    /// by --width and --height.
    #[arg(long)]
    pub allow_empty: bool,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Output prefix; writes PREFIX.bvwa and PREFIX.bvwp.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    /// Histogram file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the quantized word grid.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

/// Cost model and codebook shared by all reconstructing commands.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub adjacency: PathBuf,
    #[arg(long)]
    pub position: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
}

/// Image size in pixels; defines the grid when the input is a histogram.
#[derive(Debug, Args, Serialize)]
pub struct SizeArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Position-cost weight; the adjacency cost gets 1 - lambda.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value = "gahc", value_parser = parse_solver)]
    #[serde(serialize_with = "manifest::display")]
    pub solver: Solver,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_POPULATION)]
    pub population: usize,
    #[arg(long, default_value_t = DEFAULT_REPLACE_PROB)]
    pub replace_prob: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_GENERATIONS)]
    pub max_generations: usize,
    /// Proposals per simulated-annealing run.
    #[arg(long, default_value_t = AnnealingSchedule::default().iterations)]
    pub sa_iters: usize,
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: bovw_recon::Error| e.to_string())
}

impl SolveArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            population: self.population,
            replace_prob: self.replace_prob,
            seed: self.seed,
            max_generations: self.max_generations,
            convergence_eps: DEFAULT_CONVERGENCE_EPS,
            annealing: AnnealingSchedule {
                iterations: self.sa_iters,
                ..AnnealingSchedule::default()
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// PGM/PPM image (pooled first; enables all metrics) or histogram file.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Rendered PGM to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics CSV to write.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Recovered word grid to write.
    #[arg(long)]
    pub layout_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Rendered image.
    pub reconstruction: PathBuf,
    /// Original image; cropped to the reconstruction's size.
    pub original: PathBuf,
    /// Recovered word grid, for DC and NC.
    #[arg(long, requires = "truth")]
    pub layout: Option<PathBuf>,
    /// Ground-truth word grid, for DC and NC.
    #[arg(long, requires = "layout")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MorphArgs {
    /// Source image or histogram.
    pub source: PathBuf,
    /// Target image or histogram.
    pub target: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Seed for the order in which words are exchanged.
    #[arg(long, default_value_t = 0)]
    pub morph_seed: u64,
    /// Output directory for frames and their histograms.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    /// Weight file: K reals, optionally a second line with the bias.
    pub weights: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Candidate reconstructions, seeded seed, seed + 1, ...
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SentenceArgs {
    /// Caption words.
    #[arg(required = true)]
    pub words: Vec<String>,
    /// Caption corpus listing: `histogram path<TAB>caption` per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: bovw_recon::Error,
    },
    #[error(transparent)]
    Core(#[from] bovw_recon::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use bovw_recon::Error as E;
        match self {
            CliError::Input {
                source: E::Io(_), ..
            }
            | CliError::Core(E::Io(_))
            | CliError::Io { .. } => 3,
            CliError::Mismatch(_) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        log::warn!("thread pool: {}", e);
    }
    match commands::dispatch(&cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
