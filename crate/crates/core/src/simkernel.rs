//! Cosine similarity kernels.
//!
//! Dot products accumulate in `f64` over eight fixed lanes that are combined
//! in a fixed tree, so a given pair of vectors always produces the same bits.
//! Parallelism (feature `parallel`) is only ever across rows, never inside a
//! single dot product.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use crate::corpus::{EmbeddingSet, MIN_NORM};

/// Default tile edge for blocked similarity matrices.
pub const DEFAULT_BLOCK: usize = 2048;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero-norm vector (row {row})")]
    ZeroNorm { row: usize },
    #[error("block size and k must be positive")]
    ZeroSize,
}

/// Fixed-order dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
fn finish(dot: f64, na: f64, nb: f64) -> f64 {
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine similarity of two vectors, clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimError> {
    if a.len() != b.len() {
        return Err(SimError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = norm(a);
    if na <= MIN_NORM {
        return Err(SimError::ZeroNorm { row: 0 });
    }
    let nb = norm(b);
    if nb <= MIN_NORM {
        return Err(SimError::ZeroNorm { row: 1 });
    }
    Ok(finish(dot(a, b), na, nb))
}

/// An embedding set with its row norms computed once.
#[derive(Debug, Clone)]
pub struct Normed<'a> {
    pub set: &'a EmbeddingSet,
    norms: Vec<f64>,
}

impl<'a> Normed<'a> {
    pub fn new(set: &'a EmbeddingSet) -> Result<Self, SimError> {
        let norms: Vec<f64> = set.rows().map(norm).collect();
        if let Some(row) = norms.iter().position(|&n| n <= MIN_NORM) {
            return Err(SimError::ZeroNorm { row });
        }
        Ok(Self { set, norms })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Cosine between row `i` of `self` and row `j` of `other`; bitwise equal
    /// to [`cosine`] on the same rows.
    #[inline]
    pub fn sim(&self, i: usize, other: &Normed<'_>, j: usize) -> f64 {
        finish(dot(self.set.row(i), other.set.row(j)), self.norms[i], other.norms[j])
    }
}

fn check_dims(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<(), SimError> {
    if a.dim() != b.dim() {
        return Err(SimError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// One tile of a similarity matrix, row-major over `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityBlock {
    /// Row indices into the first set.
    pub rows: Range<usize>,
    /// Row indices into the second set.
    pub cols: Range<usize>,
    pub values: Vec<f64>,
}

impl SimilarityBlock {
    /// Value at absolute `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let width = self.cols.len();
        self.values[(row - self.rows.start) * width + (col - self.cols.start)]
    }
}

/// Streams the similarity matrix of `a × b` as blocks, row-major over the
/// block grid.
pub fn sim_matrix<'a>(a: &'a EmbeddingSet, b: &'a EmbeddingSet, block: usize) -> Result<SimBlocks<'a>, SimError> {
    check_dims(a, b)?;
    if block == 0 {
        return Err(SimError::ZeroSize);
    }
    Ok(SimBlocks {
        a: Normed::new(a)?,
        b: Normed::new(b)?,
        block,
        next: (0, 0),
    })
}

/// Iterator returned by [`sim_matrix`].
pub struct SimBlocks<'a> {
    a: Normed<'a>,
    b: Normed<'a>,
    block: usize,
    next: (usize, usize),
}

impl Iterator for SimBlocks<'_> {
    type Item = SimilarityBlock;

    fn next(&mut self) -> Option<SimilarityBlock> {
        let (r0, c0) = self.next;
        if r0 >= self.a.len() || self.b.is_empty() {
            return None;
        }
        let rows = r0..(r0 + self.block).min(self.a.len());
        let cols = c0..(c0 + self.block).min(self.b.len());
        self.next = if cols.end >= self.b.len() {
            (rows.end, 0)
        } else {
            (r0, cols.end)
        };
        let mut values = alloc::vec![0.0; rows.len() * cols.len()];
        fill_tile(&self.a, &self.b, rows.clone(), cols.clone(), &mut values);
        Some(SimilarityBlock { rows, cols, values })
    }
}

fn fill_tile(a: &Normed<'_>, b: &Normed<'_>, rows: Range<usize>, cols: Range<usize>, out: &mut [f64]) {
    let width = cols.len();
    let fill_row = |(r, dst): (usize, &mut [f64])| {
        for (c, v) in cols.clone().zip(dst.iter_mut()) {
            *v = a.sim(rows.start + r, b, c);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(width).enumerate().for_each(fill_row);
    }
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(width).enumerate().for_each(fill_row);
}

/// Dense `a.len() × b.len()` similarity matrix.
pub fn full_matrix(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<Vec<f64>, SimError> {
    let m = b.len();
    let mut out = alloc::vec![0.0; a.len() * m];
    for blk in sim_matrix(a, b, DEFAULT_BLOCK)? {
        let w = blk.cols.len();
        for (r, row) in blk.values.chunks_exact(w).enumerate() {
            let start = (blk.rows.start + r) * m + blk.cols.start;
            out[start..start + w].copy_from_slice(row);
        }
    }
    Ok(out)
}

/// A neighbor in a [`TopKList`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

/// The best `k` candidates for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKList {
    pub query_index: usize,
    pub k: usize,
    pub neighbors: Vec<Neighbor>,
}

/// Candidate ordering shared by top-k lists and pairing: higher similarity
/// first, then lower id rank.
#[inline]
pub(crate) fn rank_order(sim_a: f64, rank_a: u32, sim_b: f64, rank_b: u32) -> Ordering {
    sim_b
        .partial_cmp(&sim_a)
        .unwrap_or(Ordering::Equal)
        .then(rank_a.cmp(&rank_b))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Cand {
    pub sim: f64,
    pub rank: u32,
    pub index: u32,
}

#[inline]
fn cand_order(x: &Cand, y: &Cand) -> Ordering {
    rank_order(x.sim, x.rank, y.sim, y.rank)
}

/// Bounded best-k selector.
pub(crate) struct Selector {
    k: usize,
    buf: Vec<Cand>,
    floor: Option<Cand>,
}

impl Selector {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            buf: Vec::with_capacity(2 * k),
            floor: None,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, c: Cand) {
        if let Some(f) = &self.floor {
            if cand_order(&c, f) != Ordering::Less {
                return;
            }
        }
        self.buf.push(c);
        if self.buf.len() >= 2 * self.k {
            self.prune();
        }
    }

    fn prune(&mut self) {
        let k = self.k;
        self.buf.select_nth_unstable_by(k - 1, cand_order);
        self.buf.truncate(k);
        self.floor = Some(self.buf[k - 1]);
    }

    /// Best-first, at most `k` entries.
    pub(crate) fn finish(mut self) -> Vec<Cand> {
        self.buf.sort_unstable_by(cand_order);
        self.buf.truncate(self.k);
        self.buf
    }
}

const QUERY_CHUNK: usize = 16;
const CAND_TILE: usize = 256;

/// Best-`k` candidates of `b` for each query row of `a` in `queries`,
/// skipping candidates for which `skip` returns true.
pub(crate) fn select_topk<F>(a: &Normed<'_>, b: &Normed<'_>, queries: &[usize], k: usize, skip: F) -> Vec<Vec<Cand>>
where
    F: Fn(usize) -> bool + Sync,
{
    let ranks = b.set.id_ranks();
    let run_chunk = |chunk: &[usize]| -> Vec<Vec<Cand>> {
        let mut sel: Vec<Selector> = chunk.iter().map(|_| Selector::new(k)).collect();
        let mut start = 0;
        while start < b.len() {
            let end = (start + CAND_TILE).min(b.len());
            for (s, &q) in sel.iter_mut().zip(chunk) {
                for (j, &rank) in ranks.iter().enumerate().take(end).skip(start) {
                    if skip(j) {
                        continue;
                    }
                    s.push(Cand {
                        sim: a.sim(q, b, j),
                        rank,
                        index: j as u32,
                    });
                }
            }
            start = end;
        }
        sel.into_iter().map(Selector::finish).collect()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        queries
            .par_chunks(QUERY_CHUNK)
            .map(run_chunk)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        queries.chunks(QUERY_CHUNK).flat_map(run_chunk).collect()
    }
}

/// For every row of `a`, the `k` most similar rows of `b`, ordered by
/// descending similarity and then ascending candidate id.
pub fn topk(a: &EmbeddingSet, b: &EmbeddingSet, k: usize) -> Result<Vec<TopKList>, SimError> {
    check_dims(a, b)?;
    if k == 0 {
        return Err(SimError::ZeroSize);
    }
    let na = Normed::new(a)?;
    let nb = Normed::new(b)?;
    let queries: Vec<usize> = (0..a.len()).collect();
    let lists = select_topk(&na, &nb, &queries, k, |_| false);
    Ok(lists
        .into_iter()
        .enumerate()
        .map(|(query_index, cands)| TopKList {
            query_index,
            k,
            neighbors: cands
                .into_iter()
                .map(|c| Neighbor {
                    index: c.index as usize,
                    similarity: c.sim,
                })
                .collect(),
        })
        .collect())
}
