use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use xmf::config::RunConfig;
use xmf::tables::{self, ApproachRow};
use xmf::xmeb::{self, ReadOptions};
use xmf_core::pairing::{pair_greedy, pair_oracle};
use xmf_core::report::{summarize, StdDenominator};
use xmf_core::simkernel::sim_matrix;
use xmf_core::{PairingConfig, PairingMode, Source};

use super::{input_err, record_inputs, Failure, OrFail, Outcome, Outputs};

#[derive(Args)]
pub struct PairArgs {
    /// Audio embeddings (XMEB)
    #[arg(long)]
    audio: PathBuf,
    /// Image embeddings (XMEB)
    #[arg(long)]
    images: PathBuf,
    /// Also write every audio/image similarity to similarities.csv
    #[arg(long)]
    dump_similarities: bool,
    /// Use the n − 1 denominator for the standard deviation
    #[arg(long)]
    sample_std: bool,
}

pub fn run(args: &PairArgs, mut cfg: RunConfig) -> Outcome {
    record_inputs(&mut cfg, &[&args.audio, &args.images]);
    let mode: PairingMode = cfg
        .mode
        .parse()
        .map_err(|_| input_err(format!("unknown mode `{}`", cfg.mode)))?;
    if cfg.block_size == 0 {
        return Err(input_err("--block-size must be positive"));
    }
    let load = |path: &PathBuf, source| {
        let opts = ReadOptions {
            source: Some(source),
            ..Default::default()
        };
        xmeb::read_path(path, opts)
            .with_context(|| format!("{}", path.display()))
            .input()
    };
    let audio = load(&args.audio, Source::Audio)?;
    let images = load(&args.images, Source::Image)?;
    let config = PairingConfig {
        mode,
        audio_modality: audio.modality(),
        image_modality: images.modality(),
    };
    let outcome = pair_greedy(&audio, &images, &config).input()?;
    println!(
        "pairs={} unpaired_audio={} unpaired_images={} mode={}",
        outcome.pairs.len(),
        outcome.unpaired_audio.len(),
        outcome.unpaired_images.len(),
        mode
    );
    if cfg.oracle {
        let reference = pair_oracle(&audio, &images, &config).input()?;
        if reference != outcome {
            println!("oracle: MISMATCH");
            return Err(Failure::Numeric(anyhow!("greedy pairing disagrees with the reference")));
        }
        println!("oracle: MATCH");
    }

    let out = Outputs::new(&cfg)?;
    tables::write_pairs(out.create("pairs.csv")?, out.header(), &outcome).input()?;
    tables::write_unpaired(out.create("unpaired.csv")?, out.header(), &outcome).input()?;
    let sims: Vec<f64> = outcome.pairs.iter().map(|p| p.similarity).collect();
    if !sims.is_empty() {
        let denom = if args.sample_std {
            StdDenominator::Sample
        } else {
            StdDenominator::Population
        };
        let row = ApproachRow {
            image_modality: images.modality(),
            audio_modality: audio.modality(),
            mode,
            summary: summarize(&sims, denom).numeric()?,
        };
        tables::write_similarity_summary(out.create("similarity_summary.csv")?, out.header(), &[row]).input()?;
    }
    if args.dump_similarities {
        let blocks = sim_matrix(&audio, &images, cfg.block_size).input()?;
        tables::write_similarity_blocks(out.create("similarities.csv")?, out.header(), &audio, &images, blocks)
            .input()?;
    }
    out.finish(&cfg)
}
