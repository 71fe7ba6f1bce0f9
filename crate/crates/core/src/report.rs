//! Dataset-level analytics over pairing results.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::ItemMetadata;
use crate::pairing::Pair;

/// Upper edge (inclusive) of the low-similarity bin.
pub const LOW_MAX: f64 = 0.25;
/// Lower edge (inclusive) of the high-similarity bin.
pub const HIGH_MIN: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("no values")]
    EmptyInput,
    #[error("value {value} at index {index} is outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDenominator {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
}

// Partial sums are formed over fixed-size chunks and merged pairwise, so the
// result depends only on the input order, not on how chunks are scheduled.
const CHUNK: usize = 4096;

fn pairwise(parts: &mut Vec<f64>) -> f64 {
    while parts.len() > 1 {
        let merged: Vec<f64> = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
            .collect();
        *parts = merged;
    }
    parts.first().copied().unwrap_or(0.0)
}

fn chunked_sum<F>(values: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let part = |c: &[f64]| -> f64 {
        let mut lanes = [0.0f64; 4];
        let it = c.chunks_exact(4);
        let rest = it.remainder();
        for q in it {
            for i in 0..4 {
                lanes[i] += f(q[i]);
            }
        }
        let mut tail = 0.0;
        for &v in rest {
            tail += f(v);
        }
        (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
    };
    #[cfg(feature = "parallel")]
    let mut parts: Vec<f64> = {
        use rayon::prelude::*;
        values.par_chunks(CHUNK).map(part).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut parts: Vec<f64> = values.chunks(CHUNK).map(part).collect();
    pairwise(&mut parts)
}

/// Min, max, mean and standard deviation (two-pass).
pub fn summarize(values: &[f64], denominator: StdDenominator) -> Result<DistributionSummary, ReportError> {
    if values.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(ReportError::NonFinite { index });
    }
    let n = values.len();
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mean = (chunked_sum(values, |v| v) / n as f64).clamp(min, max);
    let ss = chunked_sum(values, |v| (v - mean) * (v - mean));
    let denom = match denominator {
        StdDenominator::Population => n as f64,
        StdDenominator::Sample if n > 1 => (n - 1) as f64,
        StdDenominator::Sample => 1.0,
    };
    Ok(DistributionSummary {
        min,
        max,
        mean,
        std_dev: libm::sqrt(ss / denom),
        count: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinCounts {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
}

impl BinCounts {
    pub fn total(&self) -> usize {
        self.low + self.medium + self.high
    }
}

/// Low is `v ≤ 0.25`, high is `v ≥ 0.6`, medium is everything between.
pub fn bin_similarities(values: &[f64]) -> Result<BinCounts, ReportError> {
    let mut bins = BinCounts::default();
    for (index, &v) in values.iter().enumerate() {
        if !(-1.0..=1.0).contains(&v) {
            return Err(ReportError::OutOfRange { index, value: v });
        }
        if v <= LOW_MAX {
            bins.low += 1;
        } else if v >= HIGH_MIN {
            bins.high += 1;
        } else {
            bins.medium += 1;
        }
    }
    Ok(bins)
}

/// Style × genre counts over paired items.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoOccurrence {
    /// Sorted.
    pub styles: Vec<String>,
    /// Sorted.
    pub genres: Vec<String>,
    /// `counts[s][g]` for `styles[s]`, `genres[g]`.
    pub counts: Vec<Vec<u64>>,
    /// Pairs whose artwork lacks a style or whose track lacks a genre.
    pub missing: u64,
}

impl CoOccurrence {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, style: &str, genre: &str) -> u64 {
        let s = self.styles.iter().position(|x| x == style);
        let g = self.genres.iter().position(|x| x == genre);
        match (s, g) {
            (Some(s), Some(g)) => self.counts[s][g],
            _ => 0,
        }
    }
}

/// Counts each pair under its artwork's style and its track's genre. The
/// style is read from the metadata entry matching `image_id`, the genre from
/// the entry matching `audio_id`.
pub fn co_occurrence(pairs: &[Pair], meta: &[ItemMetadata]) -> CoOccurrence {
    let mut style_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut genre_of: BTreeMap<&str, &str> = BTreeMap::new();
    for m in meta {
        if let Some(s) = &m.style {
            style_of.insert(&m.id, s);
        }
        if let Some(g) = &m.genre {
            genre_of.insert(&m.id, g);
        }
    }
    let mut tally: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut missing = 0;
    for p in pairs {
        match (style_of.get(p.image_id.as_str()), genre_of.get(p.audio_id.as_str())) {
            (Some(s), Some(g)) => *tally.entry((s, g)).or_insert(0) += 1,
            _ => missing += 1,
        }
    }
    let styles: Vec<String> = tally
        .keys()
        .map(|(s, _)| *s)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let genres: Vec<String> = tally
        .keys()
        .map(|(_, g)| *g)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let mut counts = alloc::vec![alloc::vec![0u64; genres.len()]; styles.len()];
    for ((s, g), n) in tally {
        let si = styles.binary_search_by(|x| x.as_str().cmp(s)).unwrap_or_default();
        let gi = genres.binary_search_by(|x| x.as_str().cmp(g)).unwrap_or_default();
        counts[si][gi] = n;
    }
    CoOccurrence {
        styles,
        genres,
        counts,
        missing,
    }
}
