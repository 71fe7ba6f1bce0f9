//! Caption quality scoring.
//!
//! Image captions are scored by a convex blend of a reference-free image–text
//! score and a learned caption-quality score; audio captions by a blend of
//! ROUGE-1 against the segment captions and a semantic similarity score.
//! Only ROUGE-1 is computed here. The other components come in as numbers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corpus::UnknownLabel;

/// Weight of the image–text score in the image composite.
pub const DEFAULT_GAMMA_IC: f64 = 0.35;
/// Weight of ROUGE-1 in the audio composite.
pub const DEFAULT_ALPHA_AC: f64 = 0.30;
pub const DEFAULT_THRESHOLD: f64 = 0.80;
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("candidate has no tokens")]
    EmptyCandidate,
    #[error("references have no tokens")]
    EmptyReferences,
    #[error("record `{id}` lacks {name}")]
    MissingComponent { id: String, name: &'static str },
    #[error("no records")]
    EmptyInput,
}

fn unit(name: &'static str, value: f64) -> Result<f64, ScoreError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ScoreError::OutOfRange { name, value })
    }
}

/// `gamma · clip + (1 − gamma) · pac`.
pub fn icscore(clip_score: f64, pac_score: f64, gamma: f64) -> Result<f64, ScoreError> {
    let clip = unit("clip_score", clip_score)?;
    let pac = unit("pac_score", pac_score)?;
    let g = unit("gamma", gamma)?;
    Ok(g * clip + (1.0 - g) * pac)
}

/// `alpha · rouge1 + (1 − alpha) · bert`.
pub fn acscore(rouge1: f64, bert_score: f64, alpha: f64) -> Result<f64, ScoreError> {
    let r = unit("rouge1", rouge1)?;
    let b = unit("bert_score", bert_score)?;
    let a = unit("alpha", alpha)?;
    Ok(a * r + (1.0 - a) * b)
}

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of each token. Tokens that trim to nothing are
/// dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RougeVariant {
    #[default]
    F1,
    Recall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RougeAggregate {
    /// Score against the multiset union of all references.
    #[default]
    Concatenate,
    /// Score against each reference separately and keep the best.
    MaxPerReference,
}

impl FromStr for RougeVariant {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f1" => Ok(Self::F1),
            "recall" => Ok(Self::Recall),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

impl FromStr for RougeAggregate {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(Self::Concatenate),
            "max" => Ok(Self::MaxPerReference),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RougeOptions {
    pub variant: RougeVariant,
    pub aggregate: RougeAggregate,
}

/// ROUGE-1 F1 of `candidate` against the concatenated `references`.
pub fn rouge1(references: &[&str], candidate: &str) -> Result<f64, ScoreError> {
    rouge1_with(references, candidate, RougeOptions::default())
}

pub fn rouge1_with(references: &[&str], candidate: &str, options: RougeOptions) -> Result<f64, ScoreError> {
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
    rouge1_tokens(&refs, &tokenize(candidate), options)
}

/// ROUGE-1 over pre-tokenized input.
pub fn rouge1_tokens<S: AsRef<str>>(
    references: &[Vec<S>],
    candidate: &[S],
    options: RougeOptions,
) -> Result<f64, ScoreError> {
    if candidate.is_empty() {
        return Err(ScoreError::EmptyCandidate);
    }
    if references.iter().all(Vec::is_empty) {
        return Err(ScoreError::EmptyReferences);
    }
    let cand = counts(candidate.iter());
    let score = |reference: &BTreeMap<&str, usize>, ref_len: usize| -> f64 {
        let overlap: usize = cand
            .iter()
            .map(|(tok, &n)| n.min(reference.get(tok).copied().unwrap_or(0)))
            .sum();
        match options.variant {
            // 2PR / (P + R) written over counts, so exact ratios stay exact
            RougeVariant::F1 => 2.0 * overlap as f64 / (candidate.len() + ref_len) as f64,
            RougeVariant::Recall => overlap as f64 / ref_len as f64,
        }
    };
    Ok(match options.aggregate {
        RougeAggregate::Concatenate => {
            let all = counts(references.iter().flatten());
            score(&all, references.iter().map(Vec::len).sum())
        }
        RougeAggregate::MaxPerReference => references
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| score(&counts(r.iter()), r.len()))
            .fold(0.0, f64::max),
    })
}

fn counts<'a, S: AsRef<str> + 'a>(tokens: impl Iterator<Item = &'a S>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_ref()).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaptionKind {
    Image,
    Audio,
}

impl CaptionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CaptionKind::Image => "image",
            CaptionKind::Audio => "audio",
        }
    }
}

impl FromStr for CaptionKind {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "image" => Ok(Self::Image),
            "audio" => Ok(Self::Audio),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

/// Per-caption metric values. Image captions use `clip_score` and
/// `pac_score`; audio captions use `rouge1` and `bert_score`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentScores {
    pub clip_score: Option<f64>,
    pub pac_score: Option<f64>,
    pub rouge1: Option<f64>,
    pub bert_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeWeights {
    pub gamma_ic: f64,
    pub alpha_ac: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self {
            gamma_ic: DEFAULT_GAMMA_IC,
            alpha_ac: DEFAULT_ALPHA_AC,
        }
    }
}

/// Composite score for a caption of the given kind.
pub fn composite(id: &str, kind: CaptionKind, c: &ComponentScores, w: &CompositeWeights) -> Result<f64, ScoreError> {
    let need = |v: Option<f64>, name| v.ok_or_else(|| ScoreError::MissingComponent { id: id.into(), name });
    match kind {
        CaptionKind::Image => icscore(
            need(c.clip_score, "clip_score")?,
            need(c.pac_score, "pac_score")?,
            w.gamma_ic,
        ),
        CaptionKind::Audio => acscore(need(c.rouge1, "rouge1")?, need(c.bert_score, "bert_score")?, w.alpha_ac),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub id: String,
    pub kind: CaptionKind,
    pub caption_text: String,
    /// Segment-level captions an audio caption was fused from.
    pub segment_captions: Vec<String>,
    pub components: ComponentScores,
    pub composite: f64,
    pub accepted: bool,
    /// Generation attempts so far, starting at 1.
    pub attempts: u32,
    /// Caption length in Unicode scalar values.
    pub length_chars: usize,
}

impl CaptionRecord {
    /// Builds a record and computes its composite.
    pub fn new(
        id: impl Into<String>,
        kind: CaptionKind,
        caption_text: impl Into<String>,
        segment_captions: Vec<String>,
        components: ComponentScores,
        attempts: u32,
        weights: &CompositeWeights,
    ) -> Result<Self, ScoreError> {
        let id = id.into();
        let caption_text = caption_text.into();
        let composite = composite(&id, kind, &components, weights)?;
        Ok(Self {
            length_chars: caption_text.chars().count(),
            id,
            kind,
            caption_text,
            segment_captions,
            components,
            composite,
            accepted: false,
            attempts: attempts.max(1),
        })
    }

    /// Recomputes the composite from the stored components.
    pub fn recompute(&self, weights: &CompositeWeights) -> Result<f64, ScoreError> {
        composite(&self.id, self.kind, &self.components, weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateDecision {
    Accept,
    Regenerate,
    RetainBelowThreshold,
}

impl GateDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            GateDecision::Accept => "accept",
            GateDecision::Regenerate => "regenerate",
            GateDecision::RetainBelowThreshold => "retain_below_threshold",
        }
    }
}

impl fmt::Display for GateDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decides what happens to a scored caption. A caption at or above
/// `threshold` is accepted; below it, the caption is sent back for
/// regeneration while attempts remain, and kept as-is once they run out.
/// `attempts` is incremented on [`GateDecision::Regenerate`].
pub fn gate(record: &mut CaptionRecord, threshold: f64, max_attempts: u32) -> GateDecision {
    if record.composite >= threshold {
        record.accepted = true;
        GateDecision::Accept
    } else if record.attempts < max_attempts {
        record.accepted = false;
        record.attempts += 1;
        GateDecision::Regenerate
    } else {
        record.accepted = false;
        GateDecision::RetainBelowThreshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinAvgMax {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl MinAvgMax {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| Self {
            min,
            avg: sum / n as f64,
            max,
        })
    }
}

/// Table-style summary over a batch of records.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionSummary {
    pub count: usize,
    pub length: MinAvgMax,
    pub clip_score: Option<MinAvgMax>,
    pub pac_score: Option<MinAvgMax>,
    pub rouge1: Option<MinAvgMax>,
    pub bert_score: Option<MinAvgMax>,
    pub composite: MinAvgMax,
    /// Composite at or above the threshold.
    pub above: usize,
    pub below: usize,
}

pub fn batch_stats(records: &[CaptionRecord], threshold: f64) -> Result<CaptionSummary, ScoreError> {
    let composite = MinAvgMax::of(records.iter().map(|r| r.composite)).ok_or(ScoreError::EmptyInput)?;
    let length = MinAvgMax::of(records.iter().map(|r| r.length_chars as f64)).ok_or(ScoreError::EmptyInput)?;
    let comp = |f: fn(&ComponentScores) -> Option<f64>| MinAvgMax::of(records.iter().filter_map(|r| f(&r.components)));
    let above = records.iter().filter(|r| r.composite >= threshold).count();
    Ok(CaptionSummary {
        count: records.len(),
        length,
        clip_score: comp(|c| c.clip_score),
        pac_score: comp(|c| c.pac_score),
        rouge1: comp(|c| c.rouge1),
        bert_score: comp(|c| c.bert_score),
        composite,
        above,
        below: records.len() - above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn audio_record(composite_parts: (f64, f64), attempts: u32) -> CaptionRecord {
        CaptionRecord::new(
            "r",
            CaptionKind::Audio,
            "some caption",
            vec![],
            ComponentScores {
                rouge1: Some(composite_parts.0),
                bert_score: Some(composite_parts.1),
                ..Default::default()
            },
            attempts,
            &CompositeWeights::default(),
        )
        .unwrap()
    }

    fn with_composite(value: f64, attempts: u32) -> CaptionRecord {
        // alpha = 0.3 with equal operands yields the operand itself
        let mut r = audio_record((value, value), attempts);
        r.composite = value;
        r
    }

    #[test]
    fn published_composites() {
        let ic = icscore(0.7821, 0.8431, DEFAULT_GAMMA_IC).unwrap();
        assert!((ic - 0.82175).abs() < 1e-12);
        assert!((ic - 0.8217).abs() < 5e-4);
        let ac = acscore(0.6894, 0.9321, DEFAULT_ALPHA_AC).unwrap();
        assert!((ac - 0.85929).abs() < 1e-12);
        let second = acscore(0.6870, 0.9312, DEFAULT_ALPHA_AC).unwrap();
        assert!((second - 0.85794).abs() < 1e-12);
        assert_eq!(icscore(1.0, 1.0, DEFAULT_GAMMA_IC).unwrap(), 1.0);
        assert_eq!(acscore(0.0, 0.0, DEFAULT_ALPHA_AC).unwrap(), 0.0);
    }

    #[test]
    fn equal_operands_are_fixed_points() {
        for g in [0.0, 0.35, 0.5, 1.0] {
            assert!((icscore(0.42, 0.42, g).unwrap() - 0.42).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_operands() {
        assert!(matches!(
            icscore(1.2, 0.5, 0.35),
            Err(ScoreError::OutOfRange { name: "clip_score", .. })
        ));
        assert!(matches!(
            acscore(0.5, -0.1, 0.3),
            Err(ScoreError::OutOfRange { name: "bert_score", .. })
        ));
        assert!(icscore(0.5, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge1(&["a b c"], "a b c").unwrap(), 1.0);
        assert_eq!(rouge1(&["the cat sat"], "the cat").unwrap(), 0.8);
        assert_eq!(rouge1(&["x y"], "z").unwrap(), 0.0);
    }

    #[test]
    fn rouge_tokenization() {
        assert_eq!(
            tokenize("  \"Hello,\tWORLD!\u{3000}día… --  "),
            vec!["hello", "world", "día"]
        );
        assert_eq!(rouge1(&["The cat, sat."], "the CAT sat").unwrap(), 1.0);
    }

    #[test]
    fn rouge_multi_reference() {
        let refs = ["a b", "c d"];
        assert_eq!(rouge1(&refs, "a b c d").unwrap(), 1.0);
        let max = RougeOptions {
            aggregate: RougeAggregate::MaxPerReference,
            ..Default::default()
        };
        // against "a b" alone: overlap 2 of 4 candidate tokens
        assert!((rouge1_with(&refs, "a b c d", max).unwrap() - 4.0 / 6.0).abs() < 1e-15);
        let recall = RougeOptions {
            variant: RougeVariant::Recall,
            ..Default::default()
        };
        assert_eq!(rouge1_with(&["the cat sat"], "the cat", recall).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn rouge_clips_repeated_tokens() {
        // candidate repeats "the"; only one counts
        let f = rouge1(&["the cat"], "the the").unwrap();
        assert_eq!(f, 2.0 * 1.0 / 4.0);
    }

    #[test]
    fn rouge_errors() {
        assert_eq!(rouge1(&["a"], " ,; ").unwrap_err(), ScoreError::EmptyCandidate);
        assert_eq!(rouge1(&["", "  "], "a").unwrap_err(), ScoreError::EmptyReferences);
        assert_eq!(rouge1(&[], "a").unwrap_err(), ScoreError::EmptyReferences);
    }

    #[test]
    fn gate_examples() {
        let mut r = with_composite(0.8217, 1);
        assert_eq!(gate(&mut r, 0.80, 3), GateDecision::Accept);
        assert!(r.accepted);

        let mut r = with_composite(0.79, 1);
        assert_eq!(gate(&mut r, 0.80, 3), GateDecision::Regenerate);
        assert_eq!(r.attempts, 2);

        let mut r = with_composite(0.6234, 3);
        assert_eq!(gate(&mut r, 0.80, 3), GateDecision::RetainBelowThreshold);
        assert_eq!(r.attempts, 3);
        assert!(!r.accepted);

        let mut r = with_composite(0.80, 3);
        assert_eq!(gate(&mut r, 0.80, 3), GateDecision::Accept);
    }

    #[test]
    fn missing_components() {
        let err = CaptionRecord::new(
            "w1",
            CaptionKind::Image,
            "x",
            vec![],
            ComponentScores {
                clip_score: Some(0.5),
                ..Default::default()
            },
            1,
            &CompositeWeights::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            ScoreError::MissingComponent {
                id: "w1".into(),
                name: "pac_score"
            }
        );
    }

    #[test]
    fn batch_counts() {
        let one = [with_composite(0.9, 1)];
        let s = batch_stats(&one, 0.8).unwrap();
        assert_eq!((s.above, s.below), (1, 0));
        let two = [with_composite(0.75, 1), with_composite(0.85, 1)];
        let s = batch_stats(&two, 0.8).unwrap();
        assert_eq!((s.above, s.below), (1, 1));
        assert!(s.clip_score.is_none());
        assert_eq!(s.length.min, 12.0);
        assert_eq!(batch_stats(&[], 0.8).unwrap_err(), ScoreError::EmptyInput);
    }
}
