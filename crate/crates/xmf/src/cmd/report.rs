use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use xmf::config::RunConfig;
use xmf::tables::{self, num};
use xmf::{metadata, tables::read_pairs};
use xmf_core::report::{bin_similarities, co_occurrence, summarize, StdDenominator};
use xmf_core::Pair;

use super::{input_err, record_inputs, OrFail, Outcome, Outputs};

#[derive(Args)]
pub struct ReportArgs {
    /// Pairs CSV written by `xmf pair`
    #[arg(long)]
    pairs: PathBuf,
    /// Item metadata (JSON Lines) with styles and genres
    #[arg(long)]
    metadata: PathBuf,
    /// Use the n − 1 denominator for the standard deviation
    #[arg(long)]
    sample_std: bool,
}

pub fn run(args: &ReportArgs, mut cfg: RunConfig) -> Outcome {
    record_inputs(&mut cfg, &[&args.pairs, &args.metadata]);
    let rows = File::open(&args.pairs)
        .map_err(anyhow::Error::from)
        .and_then(|f| read_pairs(BufReader::new(f)).map_err(Into::into))
        .with_context(|| format!("{}", args.pairs.display()))
        .input()?;
    let meta = metadata::read_path(&args.metadata)
        .with_context(|| format!("{}", args.metadata.display()))
        .input()?;
    let mode = rows.first().map(|(_, m)| *m);
    if rows.iter().any(|(_, m)| Some(*m) != mode) {
        return Err(input_err("pairs file mixes pairing modes"));
    }
    let pairs: Vec<Pair> = rows.into_iter().map(|(p, _)| p).collect();
    let sims: Vec<f64> = pairs.iter().map(|p| p.similarity).collect();
    let bins = bin_similarities(&sims).input()?;
    let co = co_occurrence(&pairs, &meta);
    let denom = if args.sample_std {
        StdDenominator::Sample
    } else {
        StdDenominator::Population
    };

    let out = Outputs::new(&cfg)?;
    let mut w = out.create("report_summary.csv")?;
    let line = match summarize(&sims, denom) {
        Ok(s) => format!(
            "{},{},{},{},{},{},{}",
            mode.map(|m| m.as_str()).unwrap_or(""),
            s.count,
            num(s.min),
            num(s.max),
            num(s.mean),
            num(s.std_dev),
            co.missing
        ),
        Err(_) => format!("{},0,,,,,{}", mode.map(|m| m.as_str()).unwrap_or(""), co.missing),
    };
    writeln!(
        w,
        "{}\nmode,count,min,max,avg,std_dev,missing_metadata\n{line}",
        out.header()
    )
    .and_then(|_| w.flush())
    .map_err(|e| anyhow!(e))
    .input()?;
    tables::write_bins(out.create("bins.csv")?, out.header(), &bins).input()?;
    tables::write_cooccurrence(out.create("cooccurrence.csv")?, out.header(), &co).input()?;
    println!(
        "pairs={} low={} medium={} high={} missing_metadata={}",
        pairs.len(),
        bins.low,
        bins.medium,
        bins.high,
        co.missing
    );
    out.finish(&cfg)
}
