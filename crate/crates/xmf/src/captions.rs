//! Caption records in JSON Lines form and the per-record decisions written
//! back out.
//!
//! Input fields: `id`, `kind` (`image` or `audio`), `caption`, optional
//! `segments` (the segment captions an audio caption was fused from),
//! optional component scores `clip_score`, `pac_score`, `rouge1`,
//! `bert_score`, and optional `attempts` (default 1). When `rouge1` is absent
//! and segments are present it is computed from them. Blank lines and lines
//! starting with `#` are skipped.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use xmf_core::capscore::{
    rouge1_with, CaptionKind, CaptionRecord, ComponentScores, CompositeWeights, GateDecision, RougeOptions, ScoreError,
};

#[derive(Debug, thiserror::Error)]
pub enum CaptionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Score {
        line: usize,
        #[source]
        source: ScoreError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Input {
    id: String,
    kind: String,
    caption: String,
    #[serde(default)]
    segments: Vec<String>,
    clip_score: Option<f64>,
    pac_score: Option<f64>,
    rouge1: Option<f64>,
    bert_score: Option<f64>,
    attempts: Option<u32>,
}

pub fn parse<R: BufRead>(
    input: R,
    weights: &CompositeWeights,
    rouge: RougeOptions,
) -> Result<Vec<CaptionRecord>, CaptionError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| CaptionError::Parse { line: line_no, message };
        let rec: Input = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        let kind: CaptionKind = rec
            .kind
            .parse()
            .map_err(|_| parse_err(format!("unknown kind `{}`", rec.kind)))?;
        let score_err = |source| CaptionError::Score { line: line_no, source };
        let rouge1 = match (rec.rouge1, rec.segments.is_empty()) {
            (Some(v), _) => Some(v),
            (None, false) => {
                let refs: Vec<&str> = rec.segments.iter().map(String::as_str).collect();
                Some(rouge1_with(&refs, &rec.caption, rouge).map_err(score_err)?)
            }
            (None, true) => None,
        };
        let components = ComponentScores {
            clip_score: rec.clip_score,
            pac_score: rec.pac_score,
            rouge1,
            bert_score: rec.bert_score,
        };
        out.push(
            CaptionRecord::new(
                rec.id,
                kind,
                rec.caption,
                rec.segments,
                components,
                rec.attempts.unwrap_or(1),
                weights,
            )
            .map_err(score_err)?,
        );
    }
    Ok(out)
}

pub fn read_path(
    path: &Path,
    weights: &CompositeWeights,
    rouge: RougeOptions,
) -> Result<Vec<CaptionRecord>, CaptionError> {
    parse(BufReader::new(File::open(path)?), weights, rouge)
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Decision<'a> {
    pub id: &'a str,
    pub kind: &'static str,
    pub composite: f64,
    pub rouge1: Option<f64>,
    pub decision: &'static str,
    pub accepted: bool,
    pub attempts: u32,
}

impl<'a> Decision<'a> {
    pub fn new(record: &'a CaptionRecord, decision: GateDecision) -> Self {
        Self {
            id: &record.id,
            kind: record.kind.as_str(),
            composite: record.composite,
            rouge1: record.components.rouge1,
            decision: decision.as_str(),
            accepted: record.accepted,
            attempts: record.attempts,
        }
    }
}

/// One JSON object per line after a `#` header line.
pub fn write_decisions<W: Write>(mut out: W, header: &str, decisions: &[Decision<'_>]) -> io::Result<()> {
    writeln!(out, "{header}")?;
    for d in decisions {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
