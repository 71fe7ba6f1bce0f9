use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd;

#[derive(Parser)]
#[command(
    name = "xmf",
    version,
    about = "Pair, score and evaluate cross-modal embedding datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Tuning flags. Each overrides the config file, which overrides defaults.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// TOML file with default settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// global_greedy or sequential_by_audio
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    block_size: Option<usize>,
    /// Worker threads (default: logical cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Caption acceptance threshold
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    gamma_ic: Option<f64>,
    #[arg(long, global = true)]
    alpha_ac: Option<f64>,
    /// Generation attempts allowed per caption
    #[arg(long, global = true)]
    max_attempts: Option<u32>,
    #[arg(long, global = true)]
    gamma_snr: Option<f64>,
    #[arg(long, global = true)]
    timesteps: Option<usize>,
    #[arg(long, global = true)]
    beta_start: Option<f64>,
    #[arg(long, global = true)]
    beta_end: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cross-check pairing against the full-matrix reference
    #[arg(long, global = true)]
    oracle: bool,
    #[arg(long, global = true)]
    out_dir: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an XMEB file and print its shape
    Ingest(cmd::ingest::IngestArgs),
    /// Pair audio items with images
    Pair(cmd::pair::PairArgs),
    /// Score captions and apply the acceptance gate
    ScoreCaptions(cmd::score::ScoreArgs),
    /// FAD, KL divergence and IBSc for generated audio
    Eval(cmd::eval::EvalArgs),
    /// Check sampler and loss identities on the configured schedule
    DiffusionCheck,
    /// Summaries, similarity bins and style/genre counts for a pairs file
    Report(cmd::report::ReportArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XMF_LOG", "warn")).init();
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::Pair(_) => "pair",
        Command::ScoreCaptions(_) => "score-captions",
        Command::Eval(_) => "eval",
        Command::DiffusionCheck => "diffusion-check",
        Command::Report(_) => "report",
    };
    let result = cmd::resolve(name, &cli.flags).and_then(|cfg| match cli.command {
        Command::Ingest(a) => cmd::ingest::run(&a, cfg),
        Command::Pair(a) => cmd::pair::run(&a, cfg),
        Command::ScoreCaptions(a) => cmd::score::run(&a, cfg),
        Command::Eval(a) => cmd::eval::run(&a, cfg),
        Command::DiffusionCheck => cmd::diffusion::run(cfg),
        Command::Report(a) => cmd::report::run(&a, cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}
