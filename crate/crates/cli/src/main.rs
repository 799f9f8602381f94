//! Batch quality assessment for omnidirectional images.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_format, parse_interp, parse_metrics, RunConfig};

#[derive(Parser)]
#[command(
    name = "tangent-iqa",
    version,
    about = "Tangential-view quality assessment for 360-degree images",
    long_about = "Extracts low-distortion tangential views from equirectangular images via \
                  icosahedral subdivision and gnomonic projection, scores them with \
                  full-reference metrics, aggregates per-view scores into t-metric values, \
                  and analyzes pairwise preference data."
)]
struct Cli {
    /// Config file (key = value); falls back to $TANGENT_IQA_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Icosahedron subdivision level b (views = 20 * 4^b).
    #[arg(long, global = true)]
    level: Option<u32>,

    /// Comma-separated metric list (built-ins: ssim,msssim,gmsd,vifs,nlpd;
    /// other names select configured plugins).
    #[arg(long, global = true)]
    metrics: Option<String>,

    /// Worker threads (0 = hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format: json or csv.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized utilities; the core commands are deterministic
    /// and ignore it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Significance level for the binomial verdicts.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the tangential views of an equirectangular image.
    Tangents {
        /// Input image (png, pgm or ppm), 2:1 equirectangular.
        input: PathBuf,
        /// Directory for view_NNNN.png files and layout.json.
        #[arg(long)]
        out_dir: PathBuf,
        /// Accept a non-2:1 input.
        #[arg(long)]
        allow_any_aspect: bool,
        /// Sampling: bicubic or bilinear.
        #[arg(long)]
        interp: Option<String>,
        /// Output sample depth: 8 or 16.
        #[arg(long, default_value_t = 8)]
        bit_depth: u8,
    },
    /// Score distorted images against a reference, one t-metric report per
    /// (image, metric).
    Score {
        /// Reference image.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Distorted images, scored in order.
        #[arg(required = true)]
        distorted: Vec<PathBuf>,
        /// Accept non-2:1 inputs.
        #[arg(long)]
        allow_any_aspect: bool,
        /// Sampling: bicubic or bilinear.
        #[arg(long)]
        interp: Option<String>,
        /// Weight per-view scores by face solid angle instead of the plain
        /// mean.
        #[arg(long)]
        solid_angle_weights: bool,
        /// Keep the temporary images handed to metric plugins.
        #[arg(long)]
        keep_temp: bool,
    },
    /// Downscale by an integer factor with an anti-aliased kernel.
    Degrade {
        input: PathBuf,
        /// Decimation factor (>= 2).
        #[arg(long, default_value_t = 4)]
        scale: u32,
        /// bicubic | bilinear | nearest | gaussian:SIGMA
        #[arg(long, default_value = "bicubic")]
        kernel: String,
        /// Output sample depth: 8 or 16.
        #[arg(long, default_value_t = 8)]
        bit_depth: u8,
    },
    /// Upscale by an integer factor.
    Upsample {
        input: PathBuf,
        /// Upscaling factor (>= 1).
        #[arg(long, default_value_t = 4)]
        scale: u32,
        /// bicubic | bilinear | nearest
        #[arg(long, default_value = "bicubic")]
        kernel: String,
        /// Output sample depth: 8 or 16.
        #[arg(long, default_value_t = 8)]
        bit_depth: u8,
    },
    /// Pairwise preference percentages from an objective score table
    /// (csv: scene,method,metric,value).
    Compare {
        scores_csv: PathBuf,
    },
    /// Statistical analysis of pairwise subjective votes
    /// (csv: scene,method_a,method_b,votes_a,votes_b,ties).
    Subjective {
        votes_csv: PathBuf,
        /// Expected comparisons per pair; cross-checked against the data.
        #[arg(long)]
        participants: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(level) = cli.level {
        config.level = level;
    }
    if let Some(metrics) = &cli.metrics {
        config.metrics = parse_metrics(metrics)?;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(format) = &cli.format {
        config.format = parse_format(format)?;
    }
    if let Some(alpha) = cli.alpha {
        config.alpha = alpha;
    }
    let _ = cli.seed;

    rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_threads())
        .build_global()
        .ok();

    let out = commands::OutputTarget::new(cli.out.clone());
    match cli.command {
        Command::Tangents {
            input,
            out_dir,
            allow_any_aspect,
            interp,
            bit_depth,
        } => {
            if let Some(i) = interp {
                config.interp = parse_interp(&i)?;
            }
            commands::tangents(&input, &out_dir, &config, allow_any_aspect, bit_depth)
        }
        Command::Score {
            reference,
            distorted,
            allow_any_aspect,
            interp,
            solid_angle_weights,
            keep_temp,
        } => {
            if let Some(i) = interp {
                config.interp = parse_interp(&i)?;
            }
            commands::score(
                &reference,
                &distorted,
                &config,
                out,
                commands::ScoreOptions {
                    allow_any_aspect,
                    solid_angle_weights,
                    keep_temp,
                },
            )
        }
        Command::Degrade {
            input,
            scale,
            kernel,
            bit_depth,
        } => commands::degrade(&input, scale, &kernel, out, bit_depth),
        Command::Upsample {
            input,
            scale,
            kernel,
            bit_depth,
        } => commands::upsample(&input, scale, &kernel, out, bit_depth),
        Command::Compare { scores_csv } => commands::compare(&scores_csv, &config, out),
        Command::Subjective {
            votes_csv,
            participants,
        } => commands::subjective(&votes_csv, participants, &config, out),
    }
}
