//! Embedding sets and item metadata.
//!
//! An [`EmbeddingSet`] holds the vectors of one (source, modality) pair, for
//! example raw image embeddings or audio-caption embeddings. Values are kept
//! in 64-bit floats; the on-disk container stores 32-bit floats.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::simkernel;

/// Norms at or below this are treated as zero.
pub const MIN_NORM: f64 = 1e-12;

/// Which side of the dataset an item belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Image,
    Audio,
}

/// Whether an embedding was computed from the media itself or from its caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Raw,
    Caption,
}

impl Source {
    pub fn tag(self) -> u8 {
        match self {
            Source::Image => 0,
            Source::Audio => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Source::Image),
            1 => Some(Source::Audio),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Image => "image",
            Source::Audio => "audio",
        }
    }
}

impl Modality {
    pub fn tag(self) -> u8 {
        match self {
            Modality::Raw => 0,
            Modality::Caption => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Modality::Raw),
            1 => Some(Modality::Caption),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Raw => "raw",
            Modality::Caption => "caption",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error returned when parsing a [`Source`] or [`Modality`] label fails.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Source {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "image" => Ok(Source::Image),
            "audio" => Ok(Source::Audio),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

impl FromStr for Modality {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Modality::Raw),
            "caption" => Ok(Modality::Caption),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("record {record}: empty id")]
    EmptyId { record: usize },
    #[error("record {record}: duplicate id `{id}`")]
    DuplicateId { record: usize, id: String },
    #[error("record {record}: expected {expected} values, found {found}")]
    DimensionMismatch {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: non-finite value at column {column}")]
    NonFiniteValue { record: usize, column: usize },
    #[error("record {record}: zero-norm row")]
    ZeroNormRow { record: usize },
    #[error("dimension must be positive")]
    ZeroDim,
}

impl CorpusError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::EmptyId { .. } => "empty-id",
            CorpusError::DuplicateId { .. } => "duplicate-id",
            CorpusError::DimensionMismatch { .. } => "dimension-mismatch",
            CorpusError::NonFiniteValue { .. } => "non-finite-value",
            CorpusError::ZeroNormRow { .. } => "zero-norm-row",
            CorpusError::ZeroDim => "dimension-mismatch",
        }
    }
}

/// Identity of one item within a set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ItemRef<'a> {
    pub id: &'a str,
    pub source: Source,
    pub modality: Modality,
}

/// Dense ID-indexed matrix of embeddings. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    source: Source,
    modality: Modality,
    ids: Vec<String>,
    dim: usize,
    rows: Vec<f64>,
    normalized: bool,
    // position of each row's id in bytewise-sorted id order
    id_rank: Vec<u32>,
}

impl EmbeddingSet {
    /// Builds a set from ids and a row-major `ids.len() × dim` buffer.
    pub fn new(
        source: Source,
        modality: Modality,
        ids: Vec<String>,
        dim: usize,
        rows: Vec<f64>,
    ) -> Result<Self, CorpusError> {
        if dim == 0 {
            return Err(CorpusError::ZeroDim);
        }
        if rows.len() != ids.len() * dim {
            let record = rows.len().min(ids.len() * dim) / dim;
            return Err(CorpusError::DimensionMismatch {
                record,
                expected: dim,
                found: rows.len().saturating_sub(record * dim).min(dim),
            });
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(CorpusError::NonFiniteValue {
                record: pos / dim,
                column: pos % dim,
            });
        }
        let id_rank = rank_ids(&ids)?;
        Ok(Self {
            source,
            modality,
            ids,
            dim,
            rows,
            normalized: false,
            id_rank,
        })
    }

    /// Builds a set from `(id, vector)` pairs; every vector must have length `dim`.
    pub fn from_rows<I, S>(source: Source, modality: Modality, dim: usize, items: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (record, (id, row)) in items.into_iter().enumerate() {
            if row.len() != dim {
                return Err(CorpusError::DimensionMismatch {
                    record,
                    expected: dim,
                    found: row.len(),
                });
            }
            ids.push(id.into());
            rows.extend_from_slice(&row);
        }
        Self::new(source, modality, ids, dim, rows)
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn item(&self, index: usize) -> ItemRef<'_> {
        ItemRef {
            id: &self.ids[index],
            source: self.source,
            modality: self.modality,
        }
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.rows.chunks_exact(self.dim)
    }

    /// Row-major backing buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.rows
    }

    /// Rank of row `index`'s id under bytewise UTF-8 ordering.
    pub fn id_rank(&self, index: usize) -> u32 {
        self.id_rank[index]
    }

    pub(crate) fn id_ranks(&self) -> &[u32] {
        &self.id_rank
    }

    /// Row indices in ascending id order.
    pub fn indices_by_id(&self) -> Vec<usize> {
        let mut order = alloc::vec![0usize; self.len()];
        for (i, &r) in self.id_rank.iter().enumerate() {
            order[r as usize] = i;
        }
        order
    }

    /// Row index of `id`, if present. Linear scan.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Fails on the first row whose Euclidean norm is at most [`MIN_NORM`].
    pub fn check_nonzero_rows(&self) -> Result<(), CorpusError> {
        match self.rows().position(|r| simkernel::norm(r) <= MIN_NORM) {
            Some(record) => Err(CorpusError::ZeroNormRow { record }),
            None => Ok(()),
        }
    }

    /// Returns a copy with every row scaled to unit length.
    ///
    /// A set that is already flagged as normalized is returned unchanged, so
    /// the operation is exactly idempotent.
    pub fn normalize(&self) -> Result<EmbeddingSet, CorpusError> {
        if self.normalized {
            return Ok(self.clone());
        }
        let mut rows = self.rows.clone();
        for (record, row) in rows.chunks_exact_mut(self.dim).enumerate() {
            let n = simkernel::norm(row);
            if n <= MIN_NORM {
                return Err(CorpusError::ZeroNormRow { record });
            }
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        Ok(Self {
            rows,
            normalized: true,
            ..self.clone_header()
        })
    }

    fn clone_header(&self) -> Self {
        Self {
            source: self.source,
            modality: self.modality,
            ids: self.ids.clone(),
            dim: self.dim,
            rows: Vec::new(),
            normalized: self.normalized,
            id_rank: self.id_rank.clone(),
        }
    }
}

fn rank_ids(ids: &[String]) -> Result<Vec<u32>, CorpusError> {
    if let Some(record) = ids.iter().position(|id| id.is_empty()) {
        return Err(CorpusError::EmptyId { record });
    }
    let mut order: Vec<u32> = (0..ids.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        ids[a as usize]
            .as_bytes()
            .cmp(ids[b as usize].as_bytes())
            .then(a.cmp(&b))
    });
    for w in order.windows(2) {
        if ids[w[0] as usize] == ids[w[1] as usize] {
            // report the later occurrence in file order
            let record = w[1] as usize;
            return Err(CorpusError::DuplicateId {
                record,
                id: ids[record].clone(),
            });
        }
    }
    let mut rank = alloc::vec![0u32; ids.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    Ok(rank)
}

/// Descriptive labels attached to an item.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ItemMetadata {
    pub id: String,
    /// Artistic style, for artworks.
    pub style: Option<String>,
    /// Music genre, for tracks.
    pub genre: Option<String>,
    /// Filled in after pairing.
    pub similarity_score: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn set(rows: Vec<(&str, Vec<f64>)>) -> Result<EmbeddingSet, CorpusError> {
        let dim = rows.first().map_or(1, |r| r.1.len());
        EmbeddingSet::from_rows(Source::Image, Modality::Raw, dim, rows)
    }

    #[test]
    fn header_echo() {
        let s = set(vec![
            ("a", vec![1.0, 2.0, 3.0, 4.0]),
            ("b", vec![0.0, 1.0, 0.0, 0.0]),
            ("c", vec![1.0, 1.0, 1.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dim(), 4);
        assert_eq!(s.row(1), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = set(vec![("a", vec![1.0]), ("a", vec![2.0])]).unwrap_err();
        assert_eq!(
            err,
            CorpusError::DuplicateId {
                record: 1,
                id: "a".to_string()
            }
        );
        assert_eq!(err.code(), "duplicate-id");
    }

    #[test]
    fn short_buffer_is_dimension_mismatch() {
        let err = EmbeddingSet::new(
            Source::Audio,
            Modality::Raw,
            vec!["a".into(), "b".into()],
            2,
            vec![1.0, 2.0],
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::DimensionMismatch { record: 1, .. }));
    }

    #[test]
    fn non_finite_rejected() {
        let err = set(vec![("a", vec![1.0, 0.0]), ("b", vec![f64::NAN, 1.0])]).unwrap_err();
        assert_eq!(err, CorpusError::NonFiniteValue { record: 1, column: 0 });
    }

    #[test]
    fn normalize_three_four_five() {
        let s = set(vec![("a", vec![3.0, 4.0]), ("b", vec![1.0, 0.0])]).unwrap();
        let n = s.normalize().unwrap();
        assert!(n.is_normalized());
        assert_eq!(n.row(0), &[0.6, 0.8]);
        assert_eq!(n.row(1), &[1.0, 0.0]);
        assert_eq!(n.normalize().unwrap(), n);
    }

    #[test]
    fn normalize_zero_row_fails() {
        let s = set(vec![("a", vec![1.0, 0.0]), ("z", vec![0.0, 0.0])]).unwrap();
        assert_eq!(s.normalize().unwrap_err(), CorpusError::ZeroNormRow { record: 1 });
        assert_eq!(s.check_nonzero_rows().unwrap_err().code(), "zero-norm-row");
    }

    #[test]
    fn id_ranks_are_bytewise() {
        let s = set(vec![("b", vec![1.0]), ("B", vec![1.0]), ("a", vec![1.0])]).unwrap();
        // 'B' (0x42) < 'a' (0x61) < 'b' (0x62)
        assert_eq!(s.id_rank(0), 2);
        assert_eq!(s.id_rank(1), 0);
        assert_eq!(s.id_rank(2), 1);
        assert_eq!(s.indices_by_id(), vec![1, 2, 0]);
        assert_eq!(s.position("a"), Some(2));
        assert_eq!(s.position("c"), None);
    }

    #[test]
    fn labels_round_trip() {
        for s in [Source::Image, Source::Audio] {
            assert_eq!(Source::from_tag(s.tag()), Some(s));
            assert_eq!(s.as_str().parse::<Source>().unwrap(), s);
        }
        for m in [Modality::Raw, Modality::Caption] {
            assert_eq!(Modality::from_tag(m.tag()), Some(m));
            assert_eq!(m.as_str().parse::<Modality>().unwrap(), m);
        }
        assert_eq!(Source::from_tag(7), None);
    }
}
