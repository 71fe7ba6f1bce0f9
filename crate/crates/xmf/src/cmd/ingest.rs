use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use xmf::xmeb::{self, ReadOptions};
use xmf_core::{Modality, Source};

use super::{record_inputs, OrFail, Outcome, Outputs};
use xmf::config::RunConfig;

#[derive(Args)]
pub struct IngestArgs {
    path: PathBuf,
    /// Require this source tag (image or audio)
    #[arg(long)]
    source: Option<Source>,
    /// Require this modality tag (raw or caption)
    #[arg(long)]
    modality: Option<Modality>,
    /// Write a unit-norm copy to the output directory
    #[arg(long)]
    normalize: bool,
}

pub fn run(args: &IngestArgs, mut cfg: RunConfig) -> Outcome {
    record_inputs(&mut cfg, &[&args.path]);
    let opts = ReadOptions {
        source: args.source,
        modality: args.modality,
        len: None,
    };
    let set = xmeb::read_path(&args.path, opts)
        .with_context(|| format!("{}", args.path.display()))
        .input()?;
    println!(
        "count={} dim={} source={} modality={}",
        set.len(),
        set.dim(),
        set.source(),
        set.modality()
    );
    if args.normalize {
        let unit = set.normalize().input()?;
        let out = Outputs::new(&cfg)?;
        let stem = args.path.file_stem().and_then(|s| s.to_str()).unwrap_or("set");
        let path = out.path(&format!("{stem}.normalized.xmeb"));
        xmeb::write_path(&path, &unit)
            .with_context(|| format!("{}", path.display()))
            .input()?;
        out.finish(&cfg)?;
    }
    Ok(())
}
