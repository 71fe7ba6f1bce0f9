//! CSV outputs. Every file starts with a `#` comment line naming the tool
//! version and config hash; readers skip `#` lines. Floats are written with
//! nine decimals.

use std::io::{self, Read, Write};

use xmf_core::capscore::{CaptionSummary, MinAvgMax};
use xmf_core::report::{BinCounts, CoOccurrence, DistributionSummary, HIGH_MIN, LOW_MAX};
use xmf_core::simkernel::SimilarityBlock;
use xmf_core::{EmbeddingSet, Modality, Pair, PairingMode, PairingOutcome};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn num(v: f64) -> String {
    format!("{v:.9}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn start<W: Write>(mut out: W, header: &str) -> io::Result<csv::Writer<W>> {
    writeln!(out, "{header}")?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_pairs<W: Write>(out: W, header: &str, outcome: &PairingOutcome) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record(["audio_id", "image_id", "similarity", "mode"])?;
    let mode = outcome.config.mode.as_str();
    for p in &outcome.pairs {
        w.write_record([p.audio_id.as_str(), &p.image_id, &num(p.similarity), mode])?;
    }
    w.flush()?;
    Ok(())
}

/// Items left without a partner.
pub fn write_unpaired<W: Write>(out: W, header: &str, outcome: &PairingOutcome) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record(["id", "source"])?;
    for id in &outcome.unpaired_audio {
        w.write_record([id.as_str(), "audio"])?;
    }
    for id in &outcome.unpaired_images {
        w.write_record([id.as_str(), "image"])?;
    }
    w.flush()?;
    Ok(())
}

/// Pairs in file order, with the mode each row was produced under.
pub fn read_pairs<R: Read>(input: R) -> Result<Vec<(Pair, PairingMode)>, TableError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let cols = r.headers()?.clone();
    let want = ["audio_id", "image_id", "similarity", "mode"];
    if cols.iter().ne(want) {
        return Err(TableError::Parse {
            line: r.position().line(),
            message: format!("expected columns {}", want.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| TableError::Parse { line, message };
        let similarity: f64 = rec[2]
            .parse()
            .map_err(|_| bad(format!("bad similarity `{}`", &rec[2])))?;
        let mode: PairingMode = rec[3].parse().map_err(|_| bad(format!("bad mode `{}`", &rec[3])))?;
        out.push((
            Pair {
                audio_id: rec[0].to_string(),
                image_id: rec[1].to_string(),
                similarity,
            },
            mode,
        ));
    }
    Ok(out)
}

/// Streams blocks of an `audio × images` similarity matrix as long-form rows.
pub fn write_similarity_blocks<W, I>(
    out: W,
    header: &str,
    audio: &EmbeddingSet,
    images: &EmbeddingSet,
    blocks: I,
) -> Result<(), TableError>
where
    W: Write,
    I: IntoIterator<Item = SimilarityBlock>,
{
    let mut w = start(out, header)?;
    w.write_record(["audio_id", "image_id", "similarity"])?;
    for blk in blocks {
        for r in blk.rows.clone() {
            for c in blk.cols.clone() {
                w.write_record([audio.id(r), images.id(c), &num(blk.get(r, c))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn modality_label(source: &str, m: Modality) -> String {
    match m {
        Modality::Raw => source.into(),
        Modality::Caption => format!("{source} Caption"),
    }
}

/// One row of similarity statistics per pairing approach, with check
/// columns for the modality used on each side.
pub struct ApproachRow {
    pub image_modality: Modality,
    pub audio_modality: Modality,
    pub mode: PairingMode,
    pub summary: DistributionSummary,
}

pub fn write_similarity_summary<W: Write>(out: W, header: &str, rows: &[ApproachRow]) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record([
        "approach",
        "image",
        "image_caption",
        "audio",
        "audio_caption",
        "mode",
        "min",
        "max",
        "avg",
        "std_dev",
        "count",
    ])?;
    let mark = |b: bool| if b { "1" } else { "0" };
    for r in rows {
        let approach = format!(
            "{}-{}",
            modality_label("Image", r.image_modality),
            modality_label("Audio", r.audio_modality)
        );
        let s = &r.summary;
        w.write_record([
            approach.as_str(),
            mark(r.image_modality == Modality::Raw),
            mark(r.image_modality == Modality::Caption),
            mark(r.audio_modality == Modality::Raw),
            mark(r.audio_modality == Modality::Caption),
            r.mode.as_str(),
            &num(s.min),
            &num(s.max),
            &num(s.mean),
            &num(s.std_dev),
            &s.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Caption statistics laid out with one column block per caption kind and
/// one row per statistic.
pub fn write_caption_summary<W: Write>(
    out: W,
    header: &str,
    image: Option<&CaptionSummary>,
    audio: Option<&CaptionSummary>,
) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record([
        "statistic",
        "image_length",
        "image_clip_score",
        "image_pac_score",
        "image_icscore",
        "audio_length",
        "audio_bert_score",
        "audio_rouge1",
        "audio_acscore",
    ])?;
    type Pick = fn(&MinAvgMax) -> f64;
    let stats: [(&str, Pick); 3] = [("minimum", |m| m.min), ("average", |m| m.avg), ("maximum", |m| m.max)];
    for (name, pick) in stats {
        let cell = |m: Option<&MinAvgMax>| m.map(|m| num(pick(m))).unwrap_or_default();
        let mut row = vec![name.to_string()];
        row.extend([
            cell(image.map(|s| &s.length)),
            cell(image.and_then(|s| s.clip_score.as_ref())),
            cell(image.and_then(|s| s.pac_score.as_ref())),
            cell(image.map(|s| &s.composite)),
            cell(audio.map(|s| &s.length)),
            cell(audio.and_then(|s| s.bert_score.as_ref())),
            cell(audio.and_then(|s| s.rouge1.as_ref())),
            cell(audio.map(|s| &s.composite)),
        ]);
        w.write_record(&row)?;
    }
    for (name, pick) in [
        (
            "above_threshold",
            (|s: &CaptionSummary| s.above) as fn(&CaptionSummary) -> usize,
        ),
        ("below_threshold", |s| s.below),
    ] {
        let count = |s: Option<&CaptionSummary>| s.map(|s| pick(s).to_string()).unwrap_or_default();
        w.write_record([name, "", "", "", &count(image), "", "", "", &count(audio)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the evaluation report; `pair_id` is `__all__` for the
/// set-level row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub pair_id: String,
    pub fad: Option<f64>,
    pub kl_div: Option<f64>,
    pub ibsc_artw_gen: Option<f64>,
    pub ibsc_gt_gen: Option<f64>,
}

pub fn write_eval<W: Write>(out: W, header: &str, rows: &[EvalRow]) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record(["pair_id", "fad", "kl_div", "ibsc_artw_gen", "ibsc_gt_gen"])?;
    for r in rows {
        w.write_record([
            r.pair_id.as_str(),
            &opt(r.fad),
            &opt(r.kl_div),
            &opt(r.ibsc_artw_gen),
            &opt(r.ibsc_gt_gen),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bins<W: Write>(out: W, header: &str, bins: &BinCounts) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    w.write_record(["bin", "lower", "upper", "count"])?;
    let (lo, hi) = (num(LOW_MAX), num(HIGH_MIN));
    w.write_record(["low", &num(-1.0), &lo, &bins.low.to_string()])?;
    w.write_record(["medium", &lo, &hi, &bins.medium.to_string()])?;
    w.write_record(["high", &hi, &num(1.0), &bins.high.to_string()])?;
    w.flush()?;
    Ok(())
}

/// Genres as rows, styles as columns.
pub fn write_cooccurrence<W: Write>(out: W, header: &str, co: &CoOccurrence) -> Result<(), TableError> {
    let mut w = start(out, header)?;
    let mut cols = vec!["genre".to_string()];
    cols.extend(co.styles.iter().cloned());
    w.write_record(&cols)?;
    for (g, genre) in co.genres.iter().enumerate() {
        let mut row = vec![genre.clone()];
        row.extend(co.counts.iter().map(|per_style| per_style[g].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
