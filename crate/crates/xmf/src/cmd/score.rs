use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use xmf::captions::{self, Decision};
use xmf::config::RunConfig;
use xmf::tables;
use xmf_core::capscore::{batch_stats, gate, CaptionKind, CaptionRecord, CompositeWeights, GateDecision, RougeOptions};

use super::{input_err, record_inputs, OrFail, Outcome, Outputs};

#[derive(Args)]
pub struct ScoreArgs {
    /// Caption JSON Lines
    path: PathBuf,
}

pub fn run(args: &ScoreArgs, mut cfg: RunConfig) -> Outcome {
    record_inputs(&mut cfg, &[&args.path]);
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(input_err("--threshold must lie in [0, 1]"));
    }
    if cfg.max_attempts == 0 {
        return Err(input_err("--max-attempts must be positive"));
    }
    let weights = CompositeWeights {
        gamma_ic: cfg.gamma_ic,
        alpha_ac: cfg.alpha_ac,
    };
    let mut records = captions::read_path(&args.path, &weights, RougeOptions::default())
        .with_context(|| format!("{}", args.path.display()))
        .input()?;
    let decisions: Vec<GateDecision> = records
        .iter_mut()
        .map(|r| gate(r, cfg.threshold, cfg.max_attempts))
        .collect();
    let count = |d: GateDecision| decisions.iter().filter(|x| **x == d).count();
    println!(
        "records={} accept={} regenerate={} retain_below_threshold={}",
        records.len(),
        count(GateDecision::Accept),
        count(GateDecision::Regenerate),
        count(GateDecision::RetainBelowThreshold)
    );

    let out = Outputs::new(&cfg)?;
    let lines: Vec<Decision<'_>> = records
        .iter()
        .zip(&decisions)
        .map(|(r, d)| Decision::new(r, *d))
        .collect();
    captions::write_decisions(out.create("decisions.jsonl")?, out.header(), &lines).input()?;
    let of_kind = |k: CaptionKind| -> Vec<CaptionRecord> { records.iter().filter(|r| r.kind == k).cloned().collect() };
    let stats = |k| {
        let rs = of_kind(k);
        if rs.is_empty() {
            Ok(None)
        } else {
            batch_stats(&rs, cfg.threshold).map(Some)
        }
    };
    let image = stats(CaptionKind::Image).input()?;
    let audio = stats(CaptionKind::Audio).input()?;
    tables::write_caption_summary(
        out.create("caption_summary.csv")?,
        out.header(),
        image.as_ref(),
        audio.as_ref(),
    )
    .input()?;
    out.finish(&cfg)
}
