//! One-to-one audio/image assignment by greedy similarity.
//!
//! Two orderings are supported:
//!
//! - [`PairingMode::GlobalGreedy`] repeatedly takes the most similar
//!   (audio, image) pair among unmatched items and removes both.
//! - [`PairingMode::SequentialByAudio`] ranks audio items once by their best
//!   similarity over all images, then visits them in that order, giving each
//!   the most similar image still available.
//!
//! Ties are broken by higher similarity, then ascending audio id, then
//! ascending image id (bytewise UTF-8), so outputs are fully determined by
//! the ids and vectors and never by row order.
//!
//! [`pair_greedy`] keeps a bounded candidate list per audio item and rescans
//! only when a list runs dry; [`pair_oracle`] materializes the whole matrix
//! and is the reference it is tested against.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::corpus::{EmbeddingSet, Modality, Source, UnknownLabel};
use crate::simkernel::{self, Cand, Normed, SimError};

/// Largest `|audio| × |images|` the oracle accepts.
pub const ORACLE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PairingMode {
    #[default]
    GlobalGreedy,
    SequentialByAudio,
}

impl PairingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PairingMode::GlobalGreedy => "global_greedy",
            PairingMode::SequentialByAudio => "sequential_by_audio",
        }
    }
}

impl fmt::Display for PairingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairingMode {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global_greedy" => Ok(PairingMode::GlobalGreedy),
            "sequential_by_audio" => Ok(PairingMode::SequentialByAudio),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairingConfig {
    pub mode: PairingMode,
    pub audio_modality: Modality,
    pub image_modality: Modality,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            mode: PairingMode::GlobalGreedy,
            audio_modality: Modality::Raw,
            image_modality: Modality::Raw,
        }
    }
}

impl PairingConfig {
    pub fn with_mode(mode: PairingMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// Scaling knobs. They never change the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingTuning {
    /// Candidates cached per audio item.
    pub candidates: usize,
}

impl Default for PairingTuning {
    fn default() -> Self {
        Self { candidates: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub audio_id: String,
    pub image_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingOutcome {
    /// In selection order.
    pub pairs: Vec<Pair>,
    /// Ascending id.
    pub unpaired_images: Vec<String>,
    /// Ascending id; non-empty only when there are fewer images than audio items.
    pub unpaired_audio: Vec<String>,
    pub config: PairingConfig,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairingError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("image set is empty")]
    EmptyImageSet,
    #[error("{cells} similarity cells exceed the oracle limit of {limit}")]
    SizeLimitExceeded { cells: usize, limit: usize },
    #[error("{role} set is {found_source}/{found_modality}, expected {expected_source}/{expected_modality}")]
    WrongSet {
        role: &'static str,
        expected_source: Source,
        expected_modality: Modality,
        found_source: Source,
        found_modality: Modality,
    },
}

fn check_inputs(audio: &EmbeddingSet, images: &EmbeddingSet, config: &PairingConfig) -> Result<(), PairingError> {
    let expect = |role, set: &EmbeddingSet, source, modality| {
        if set.source() != source || set.modality() != modality {
            Err(PairingError::WrongSet {
                role,
                expected_source: source,
                expected_modality: modality,
                found_source: set.source(),
                found_modality: set.modality(),
            })
        } else {
            Ok(())
        }
    };
    expect("audio", audio, Source::Audio, config.audio_modality)?;
    expect("image", images, Source::Image, config.image_modality)?;
    if audio.dim() != images.dim() {
        return Err(SimError::DimMismatch {
            left: audio.dim(),
            right: images.dim(),
        }
        .into());
    }
    if images.is_empty() {
        return Err(PairingError::EmptyImageSet);
    }
    Ok(())
}

/// Selection key: better pairs compare greater.
#[derive(Debug, Clone, Copy)]
struct Key {
    sim: f64,
    audio_rank: u32,
    image_rank: u32,
    audio: u32,
    image: u32,
}

impl Key {
    fn order(&self, other: &Self) -> Ordering {
        self.sim
            .partial_cmp(&other.sim)
            .unwrap_or(Ordering::Equal)
            .then(other.audio_rank.cmp(&self.audio_rank))
            .then(other.image_rank.cmp(&self.image_rank))
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.order(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order(other)
    }
}

/// Per-audio candidate caches with lazy invalidation.
struct Candidates<'s, 'a> {
    audio: &'s Normed<'a>,
    images: &'s Normed<'a>,
    k: usize,
    lists: Vec<Vec<Cand>>,
    cursor: Vec<usize>,
    // the cached list held every image available when it was built
    complete: Vec<bool>,
    taken: Vec<bool>,
    available: usize,
}

impl<'s, 'a> Candidates<'s, 'a> {
    fn new(audio: &'s Normed<'a>, images: &'s Normed<'a>, k: usize) -> Self {
        let queries: Vec<usize> = (0..audio.len()).collect();
        let lists = simkernel::select_topk(audio, images, &queries, k, |_| false);
        let complete = alloc::vec![images.len() <= k; audio.len()];
        Self {
            audio,
            images,
            k,
            lists,
            cursor: alloc::vec![0; audio.len()],
            complete,
            taken: alloc::vec![false; images.len()],
            available: images.len(),
        }
    }

    /// First cached candidate (ignoring availability).
    fn initial_best(&self, a: usize) -> Cand {
        self.lists[a][0]
    }

    fn best_available(&mut self, a: usize) -> Option<Cand> {
        loop {
            let list = &self.lists[a];
            let mut cur = self.cursor[a];
            while cur < list.len() && self.taken[list[cur].index as usize] {
                cur += 1;
            }
            self.cursor[a] = cur;
            if cur < list.len() {
                return Some(list[cur]);
            }
            if self.complete[a] || self.available == 0 {
                return None;
            }
            let taken = &self.taken;
            let fresh = simkernel::select_topk(self.audio, self.images, &[a], self.k, |j| taken[j])
                .pop()
                .unwrap_or_default();
            self.complete[a] = self.available <= self.k;
            self.lists[a] = fresh;
            self.cursor[a] = 0;
        }
    }

    fn take(&mut self, image: usize) {
        debug_assert!(!self.taken[image]);
        self.taken[image] = true;
        self.available -= 1;
    }
}

/// Greedy pairing with default tuning.
pub fn pair_greedy(
    audio: &EmbeddingSet,
    images: &EmbeddingSet,
    config: &PairingConfig,
) -> Result<PairingOutcome, PairingError> {
    pair_greedy_tuned(audio, images, config, &PairingTuning::default())
}

/// Greedy pairing using cached candidate lists of `tuning.candidates` entries.
pub fn pair_greedy_tuned(
    audio: &EmbeddingSet,
    images: &EmbeddingSet,
    config: &PairingConfig,
    tuning: &PairingTuning,
) -> Result<PairingOutcome, PairingError> {
    check_inputs(audio, images, config)?;
    let na = Normed::new(audio)?;
    let ni = Normed::new(images)?;
    let k = tuning.candidates.max(1);
    let mut cands = Candidates::new(&na, &ni, k);
    let mut matched: Vec<(u32, u32, f64)> = Vec::with_capacity(audio.len().min(images.len()));

    match config.mode {
        PairingMode::GlobalGreedy => {
            let mut heap = BinaryHeap::with_capacity(audio.len());
            let key = |a: usize, c: Cand| Key {
                sim: c.sim,
                audio_rank: audio.id_rank(a),
                image_rank: c.rank,
                audio: a as u32,
                image: c.index,
            };
            for a in 0..audio.len() {
                if let Some(c) = cands.best_available(a) {
                    heap.push(key(a, c));
                }
            }
            while let Some(top) = heap.pop() {
                let a = top.audio as usize;
                if cands.taken[top.image as usize] {
                    if let Some(c) = cands.best_available(a) {
                        heap.push(key(a, c));
                    }
                    continue;
                }
                cands.take(top.image as usize);
                matched.push((top.audio, top.image, top.sim));
            }
        }
        PairingMode::SequentialByAudio => {
            let mut order: Vec<usize> = (0..audio.len()).collect();
            order.sort_unstable_by(|&x, &y| {
                let (cx, cy) = (cands.initial_best(x), cands.initial_best(y));
                simkernel::rank_order(cx.sim, audio.id_rank(x), cy.sim, audio.id_rank(y))
            });
            for a in order {
                if let Some(c) = cands.best_available(a) {
                    cands.take(c.index as usize);
                    matched.push((a as u32, c.index, c.sim));
                }
            }
        }
    }

    let taken = core::mem::take(&mut cands.taken);
    Ok(build_outcome(audio, images, config, matched, &taken))
}

fn build_outcome(
    audio: &EmbeddingSet,
    images: &EmbeddingSet,
    config: &PairingConfig,
    matched: Vec<(u32, u32, f64)>,
    image_taken: &[bool],
) -> PairingOutcome {
    let mut audio_taken = alloc::vec![false; audio.len()];
    let pairs = matched
        .into_iter()
        .map(|(a, i, sim)| {
            audio_taken[a as usize] = true;
            Pair {
                audio_id: audio.id(a as usize).into(),
                image_id: images.id(i as usize).into(),
                similarity: sim,
            }
        })
        .collect();
    let unpaired_images = images
        .indices_by_id()
        .into_iter()
        .filter(|&i| !image_taken[i])
        .map(|i| images.id(i).into())
        .collect();
    let unpaired_audio = audio
        .indices_by_id()
        .into_iter()
        .filter(|&a| !audio_taken[a])
        .map(|a| audio.id(a).into())
        .collect();
    PairingOutcome {
        pairs,
        unpaired_images,
        unpaired_audio,
        config: *config,
    }
}

/// Reference pairing over the fully materialized similarity matrix.
///
/// Global mode sorts every cell by the selection key and sweeps it, taking a
/// cell whenever both of its items are still free; this is the same sequence
/// repeated argmax-with-deletion produces. Sequential mode scans full rows.
pub fn pair_oracle(
    audio: &EmbeddingSet,
    images: &EmbeddingSet,
    config: &PairingConfig,
) -> Result<PairingOutcome, PairingError> {
    let cells = audio.len().saturating_mul(images.len());
    if cells > ORACLE_LIMIT {
        return Err(PairingError::SizeLimitExceeded {
            cells,
            limit: ORACLE_LIMIT,
        });
    }
    check_inputs(audio, images, config)?;
    let m = images.len();
    let sim = simkernel::full_matrix(audio, images)?;
    let mut image_taken = alloc::vec![false; m];
    let mut matched = Vec::new();

    match config.mode {
        PairingMode::GlobalGreedy => {
            let mut keys: Vec<Key> = (0..audio.len())
                .flat_map(|a| {
                    let sim = &sim;
                    (0..m).map(move |i| Key {
                        sim: sim[a * m + i],
                        audio_rank: audio.id_rank(a),
                        image_rank: images.id_rank(i),
                        audio: a as u32,
                        image: i as u32,
                    })
                })
                .collect();
            keys.sort_unstable_by(|x, y| y.cmp(x));
            let mut audio_taken = alloc::vec![false; audio.len()];
            for k in keys {
                let (a, i) = (k.audio as usize, k.image as usize);
                if audio_taken[a] || image_taken[i] {
                    continue;
                }
                audio_taken[a] = true;
                image_taken[i] = true;
                matched.push((k.audio, k.image, k.sim));
            }
        }
        PairingMode::SequentialByAudio => {
            let row_best = |a: usize, taken: &[bool]| -> Option<usize> {
                let mut best: Option<usize> = None;
                for i in 0..m {
                    if taken[i] {
                        continue;
                    }
                    best = match best {
                        Some(b)
                            if simkernel::rank_order(
                                sim[a * m + b],
                                images.id_rank(b),
                                sim[a * m + i],
                                images.id_rank(i),
                            ) != Ordering::Greater =>
                        {
                            Some(b)
                        }
                        _ => Some(i),
                    };
                }
                best
            };
            let none_taken = alloc::vec![false; m];
            let mut order: Vec<(usize, f64)> = (0..audio.len())
                .map(|a| {
                    let b = row_best(a, &none_taken).expect("non-empty image set");
                    (a, sim[a * m + b])
                })
                .collect();
            order.sort_unstable_by(|x, y| simkernel::rank_order(x.1, audio.id_rank(x.0), y.1, audio.id_rank(y.0)));
            for (a, _) in order {
                if let Some(i) = row_best(a, &image_taken) {
                    image_taken[i] = true;
                    matched.push((a as u32, i as u32, sim[a * m + i]));
                }
            }
        }
    }
    Ok(build_outcome(audio, images, config, matched, &image_taken))
}
