use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod plot;

use config::{TrainingArgs, UsageError};

#[derive(Parser)]
#[command(name = "lctid", version, about = "Literary vs colloquial speech dialect identification")]
struct Cli {
    /// Seed for every random choice; falls back to $LCTID_SEED, then 0
    #[arg(long, env = "LCTID_SEED", global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rfe,
    Ife,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class corpus with a manifest
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        utterances: usize,
        #[arg(long, default_value_t = 1.0)]
        min_duration: f64,
        #[arg(long, default_value_t = 4.0)]
        max_duration: f64,
    },
    /// Write one feature CSV per utterance plus an index
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "handcrafted")]
        features: String,
        #[arg(long)]
        out: PathBuf,
        /// TOML file whose `[extraction]` table overrides analysis settings
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plot one feature's contour for two utterances (SVG plus CSV)
    Plot {
        /// First utterance (WAV)
        a: PathBuf,
        /// Second utterance (WAV)
        b: PathBuf,
        /// Feature id, e.g. F0 or HNR
        #[arg(long)]
        feature: String,
        /// Output SVG path; the CSV is written next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on a stratified split and report held-out metrics
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for model, metadata and results
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: TrainingArgs,
    },
    /// Evaluate a trained model on a manifest
    Eval {
        /// Model file written by `train`
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Expected feature set; must match the model's
        #[arg(long)]
        features: Option<String>,
        /// Results JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank features by recursive elimination or independent evaluation
    Ablate {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// For rfe: keep eliminating until this many features remain (default: one round)
        #[arg(long)]
        keep: Option<usize>,
        #[command(flatten)]
        opts: TrainingArgs,
    },
    /// Cross-validate the concatenation of two disjoint feature sets
    Combine {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        base: String,
        #[arg(long)]
        extra: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: TrainingArgs,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(config::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Synth {
            out,
            utterances,
            min_duration,
            max_duration,
        } => commands::synth(&out, utterances, min_duration, max_duration, seed.unwrap_or(0)),
        Command::Extract {
            manifest,
            features,
            out,
            config,
        } => commands::extract(&manifest, &features, &out, config.as_deref()),
        Command::Plot { a, b, feature, out } => commands::plot(&a, &b, &feature, &out),
        Command::Train { manifest, out, opts } => commands::train(&manifest, &out, &opts.resolve(seed, "handcrafted")?),
        Command::Eval {
            model,
            manifest,
            features,
            out,
        } => commands::eval(&model, &manifest, features.as_deref(), &out),
        Command::Ablate {
            method,
            manifest,
            out,
            keep,
            opts,
        } => commands::ablate(matches!(method, Method::Rfe), &manifest, &out, keep, &opts.resolve(seed, "handcrafted")?),
        Command::Combine {
            manifest,
            base,
            extra,
            out,
            opts,
        } => commands::combine(&manifest, &base, &extra, &out, &opts.resolve(seed, "handcrafted")?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
