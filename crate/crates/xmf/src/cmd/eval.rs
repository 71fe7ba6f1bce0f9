use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use xmf::config::RunConfig;
use xmf::probs;
use xmf::tables::{self, EvalRow};
use xmf::xmeb::{self, ReadOptions};
use xmf_core::genmetrics::{fad, fit_gaussian, ibsc, kl_div, MetricsError, DEFAULT_KL_EPS};
use xmf_core::EmbeddingSet;

use super::{input_err, record_inputs, Failure, OrFail, Outcome, Outputs};

#[derive(Args)]
pub struct EvalArgs {
    /// Ground-truth audio embeddings (XMEB)
    #[arg(long)]
    reference: PathBuf,
    /// Generated audio embeddings (XMEB), ids matching the reference
    #[arg(long)]
    generated: PathBuf,
    /// Artwork embeddings in the same space as the audio, ids matching
    #[arg(long)]
    artwork: Option<PathBuf>,
    /// Per-item probability vectors for the reference audio (JSON Lines)
    #[arg(long, requires = "generated_probs")]
    reference_probs: Option<PathBuf>,
    /// Per-item probability vectors for the generated audio (JSON Lines)
    #[arg(long, requires = "reference_probs")]
    generated_probs: Option<PathBuf>,
}

fn metric<T>(r: Result<T, MetricsError>) -> Result<T, Failure> {
    match r {
        Err(e @ MetricsError::NonPsd { .. }) => Err(Failure::Numeric(e.into())),
        other => other.input(),
    }
}

fn load(path: &Path) -> Result<EmbeddingSet, Failure> {
    xmeb::read_path(path, ReadOptions::default())
        .with_context(|| format!("{}", path.display()))
        .input()
}

fn index(set: &EmbeddingSet) -> BTreeMap<&str, usize> {
    set.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run(args: &EvalArgs, mut cfg: RunConfig) -> Outcome {
    let mut inputs: Vec<&Path> = vec![&args.reference, &args.generated];
    inputs.extend(args.artwork.as_deref());
    inputs.extend(args.reference_probs.as_deref());
    inputs.extend(args.generated_probs.as_deref());
    record_inputs(&mut cfg, &inputs);

    let reference = load(&args.reference)?;
    let generated = load(&args.generated)?;
    let artwork = args.artwork.as_deref().map(load).transpose()?;
    let probs = match (&args.reference_probs, &args.generated_probs) {
        (Some(r), Some(g)) => {
            let read = |p: &PathBuf| probs::read_path(p).with_context(|| format!("{}", p.display())).input();
            Some((read(r)?, read(g)?))
        }
        _ => None,
    };
    if reference.dim() != generated.dim() {
        return Err(input_err(format!(
            "reference has dimension {}, generated has {}",
            reference.dim(),
            generated.dim()
        )));
    }

    let ref_ix = index(&reference);
    let art_ix = artwork.as_ref().map(index);
    let mut rows = Vec::with_capacity(generated.len() + 1);
    for (g, id) in generated.ids().iter().enumerate() {
        let gen = generated.row(g);
        let gt = match ref_ix.get(id.as_str()) {
            Some(&r) => Some(metric(ibsc(reference.row(r), gen))?),
            None => None,
        };
        let art = match (&artwork, art_ix.as_ref().and_then(|ix| ix.get(id.as_str()))) {
            (Some(a), Some(&i)) => Some(metric(ibsc(a.row(i), gen))?),
            _ => None,
        };
        let kl = match &probs {
            Some((pr, pg)) => match (pr.get(id), pg.get(id)) {
                (Some(p), Some(q)) => Some(metric(kl_div(p, q, DEFAULT_KL_EPS))?),
                _ => None,
            },
            None => None,
        };
        rows.push(EvalRow {
            pair_id: id.clone(),
            fad: None,
            kl_div: kl,
            ibsc_artw_gen: art,
            ibsc_gt_gen: gt,
        });
    }
    let set_fad = metric(fit_gaussian(&reference).and_then(|r| fad(&r, &fit_gaussian(&generated)?)))?;
    let all = EvalRow {
        pair_id: "__all__".into(),
        fad: Some(set_fad),
        kl_div: mean(rows.iter().map(|r| r.kl_div)),
        ibsc_artw_gen: mean(rows.iter().map(|r| r.ibsc_artw_gen)),
        ibsc_gt_gen: mean(rows.iter().map(|r| r.ibsc_gt_gen)),
    };
    println!("fad={}", tables::num(set_fad));
    rows.push(all);
    if let Some(bad) = rows.iter().find(|r| {
        [r.fad, r.kl_div, r.ibsc_artw_gen, r.ibsc_gt_gen]
            .iter()
            .flatten()
            .any(|v| !v.is_finite())
    }) {
        return Err(Failure::Numeric(anyhow::anyhow!(
            "non-finite metric for `{}`",
            bad.pair_id
        )));
    }

    let out = Outputs::new(&cfg)?;
    tables::write_eval(out.create("eval.csv")?, out.header(), &rows).input()?;
    out.finish(&cfg)
}
