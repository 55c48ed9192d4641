mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Vector-quantization image codec.
#[derive(Debug, Parser)]
#[command(name = "vqic", version, about)]
struct Cli {
    /// TOML config file; its values replace the built-in defaults and are in
    /// turn overridden by command-line flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a root codebook with k-means++ and Lloyd iterations.
    TrainCodebook(TrainCodebookArgs),
    /// Derive a ladder of smaller codebooks by clustering a root codebook.
    Cluster(ClusterArgs),
    /// Compress a PPM image into a stream.
    Encode(EncodeArgs),
    /// Reconstruct a PPM image from a stream.
    Decode(DecodeArgs),
    /// Train the lost-index predictor on index maps of a set of images.
    TrainPredictor(TrainPredictorArgs),
    /// Drop indices from a stream, restore them and measure the damage.
    SimulateLoss(SimulateLossArgs),
    /// Rate-distortion sweep of a set of images over a set of codebooks.
    RdCurve(RdCurveArgs),
    /// Print the metadata of a stream, codebook or predictor file.
    Inspect(InspectArgs),
    /// Render a reproducible corpus of synthetic natural-looking scenes.
    SynthImages(SynthImagesArgs),
}

#[derive(Debug, Args)]
struct TrainCodebookArgs {
    /// Directory of training PPM images.
    #[arg(long)]
    images: PathBuf,
    /// Codebook size.
    #[arg(long)]
    k: Option<usize>,
    /// Latent dimension.
    #[arg(long)]
    n_z: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Root codebook to cluster.
    #[arg(long)]
    root: PathBuf,
    /// Comma-separated sizes, largest first.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    /// Images whose latents refine each clustered codebook. Without it the
    /// codebooks are clustered only.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output directory; receives one `K<size>.vqcb` per ladder size.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainPredictorArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Number of causal neighbours in the full context.
    #[arg(long)]
    context_size: Option<usize>,
    /// Comma-separated backoff context lengths, longest first, ending in 0.
    #[arg(long, value_delimiter = ',')]
    backoff_levels: Option<Vec<usize>>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateLossArgs {
    stream: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Fraction of indices lost.
    #[arg(long)]
    alpha: f64,
    /// Lose raster runs of this length instead of independent cells.
    #[arg(long)]
    loss_burst: Option<usize>,
    #[arg(long)]
    out_image: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
    /// Append the row to an existing CSV instead of replacing it.
    #[arg(long)]
    append: bool,
}

#[derive(Debug, Args)]
struct RdCurveArgs {
    /// Directory of test PPM images.
    #[arg(long)]
    images: PathBuf,
    /// Codebook files; may be repeated.
    #[arg(long = "codebook")]
    codebooks: Vec<PathBuf>,
    /// Directory whose `*.vqcb` files are all used.
    #[arg(long)]
    codebook_dir: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// Also write every encoded stream here.
    #[arg(long)]
    streams_dir: Option<PathBuf>,
    /// Also write a gnuplot script plotting the mean curve from the CSV.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    file: PathBuf,
}

#[derive(Debug, Args)]
struct SynthImagesArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 24)]
    count: usize,
    #[arg(long, default_value_t = 768)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::code_for(&err))
        }
    }
}
