//! Reader and writer for XMEB embedding files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "XMEB" | version u16 = 1 | source u8 | modality u8 | count u64 | dim u32
//! count × (len u16, UTF-8 id bytes)
//! count × dim f32, row-major
//! ```
//!
//! Values are widened to `f64` on read and narrowed back on write, so a file
//! that was read successfully is reproduced byte for byte.
//!
//! Rejected inputs and their error codes:
//!
//! | malformation                         | code                 |
//! |--------------------------------------|----------------------|
//! | magic other than `XMEB`              | `malformed-header`   |
//! | version other than 1                 | `malformed-header`   |
//! | unknown source or modality tag       | `malformed-header`   |
//! | payload shorter than `count × dim`   | `dimension-mismatch` |
//! | the same id twice                    | `duplicate-id`       |
//! | NaN or infinite value                | `non-finite-value`   |
//!
//! Rows with norm at most [`MIN_NORM`] are refused too (`zero-norm-row`), as
//! are truncated id tables, empty or non-UTF-8 ids (`malformed-header`) and
//! bytes past the payload (`dimension-mismatch`). Every error carries the
//! byte offset where reading stopped.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use xmf_core::corpus::{CorpusError, MIN_NORM};
use xmf_core::{EmbeddingSet, Modality, Source};

pub const MAGIC: &[u8; 4] = b"XMEB";
pub const VERSION: u16 = 1;
/// Bytes before the id table.
pub const HEADER_LEN: u64 = 20;

// Upper bound on speculative preallocation when the input length is unknown.
const MAX_PREALLOC: usize = 1 << 24;

#[derive(Debug, thiserror::Error)]
pub enum XmebError {
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: u64, reason: String },
    #[error("record {record} at byte {offset}: payload does not match the declared count and dimension")]
    DimensionMismatch { record: u64, offset: u64 },
    #[error("record {record} at byte {offset}: duplicate id `{id}`")]
    DuplicateId { record: u64, offset: u64, id: String },
    #[error("record {record} at byte {offset}: non-finite value in column {column}")]
    NonFiniteValue { record: u64, column: u64, offset: u64 },
    #[error("record {record} at byte {offset}: zero-norm row")]
    ZeroNormRow { record: u64, offset: u64 },
    #[error("cannot write: {0}")]
    Unwritable(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl XmebError {
    pub fn code(&self) -> &'static str {
        match self {
            XmebError::MalformedHeader { .. } => "malformed-header",
            XmebError::DimensionMismatch { .. } => "dimension-mismatch",
            XmebError::DuplicateId { .. } => "duplicate-id",
            XmebError::NonFiniteValue { .. } => "non-finite-value",
            XmebError::ZeroNormRow { .. } => "zero-norm-row",
            XmebError::Unwritable(_) => "unwritable",
            XmebError::Io(_) => "io",
        }
    }

    /// Byte offset the error points at, if any.
    pub fn offset(&self) -> Option<u64> {
        match self {
            XmebError::MalformedHeader { offset, .. }
            | XmebError::DimensionMismatch { offset, .. }
            | XmebError::DuplicateId { offset, .. }
            | XmebError::NonFiniteValue { offset, .. }
            | XmebError::ZeroNormRow { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

fn malformed(offset: u64, reason: impl Into<String>) -> XmebError {
    XmebError::MalformedHeader {
        offset,
        reason: reason.into(),
    }
}

/// Decoded fixed-size header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub source: Source,
    pub modality: Modality,
    pub count: u64,
    pub dim: u32,
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    /// Fills `buf`; `Ok(false)` on a short read, with `offset` advanced past
    /// whatever was consumed.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<bool> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        self.offset += got as u64;
        Ok(got == buf.len())
    }
}

fn read_header<R: Read>(cur: &mut Cursor<R>) -> Result<Header, XmebError> {
    let mut h = [0u8; HEADER_LEN as usize];
    if !cur.fill(&mut h)? {
        return Err(malformed(cur.offset, "truncated header"));
    }
    if &h[..4] != MAGIC {
        return Err(malformed(0, "bad magic"));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    if version != VERSION {
        return Err(malformed(4, format!("unsupported version {version}")));
    }
    let source = Source::from_tag(h[6]).ok_or_else(|| malformed(6, format!("unknown source tag {}", h[6])))?;
    let modality = Modality::from_tag(h[7]).ok_or_else(|| malformed(7, format!("unknown modality tag {}", h[7])))?;
    let count = u64::from_le_bytes(h[8..16].try_into().expect("8 bytes"));
    let dim = u32::from_le_bytes(h[16..20].try_into().expect("4 bytes"));
    if dim == 0 {
        return Err(malformed(16, "dimension must be positive"));
    }
    if count
        .checked_mul(u64::from(dim))
        .and_then(|v| v.checked_mul(4))
        .is_none()
    {
        return Err(malformed(8, "count × dim overflows"));
    }
    Ok(Header {
        source,
        modality,
        count,
        dim,
    })
}

/// Options for [`read`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Reject files whose source tag differs.
    pub source: Option<Source>,
    /// Reject files whose modality tag differs.
    pub modality: Option<Modality>,
    /// Total input length in bytes, when known. Lets the reader size the
    /// row buffer exactly and report truncation before reading the payload.
    pub len: Option<u64>,
}

/// Reads and validates one XMEB stream. Every row must be finite and have a
/// norm above [`MIN_NORM`].
pub fn read<R: Read>(input: R, options: ReadOptions) -> Result<EmbeddingSet, XmebError> {
    let mut cur = Cursor {
        inner: input,
        offset: 0,
    };
    let header = read_header(&mut cur)?;
    if let Some(s) = options.source.filter(|s| *s != header.source) {
        return Err(malformed(6, format!("source is {}, expected {s}", header.source)));
    }
    if let Some(m) = options.modality.filter(|m| *m != header.modality) {
        return Err(malformed(7, format!("modality is {}, expected {m}", header.modality)));
    }
    let count = usize::try_from(header.count).map_err(|_| malformed(8, "count too large"))?;
    let dim = header.dim as usize;

    let mut ids = Vec::with_capacity(count.min(MAX_PREALLOC));
    let mut seen: HashSet<String> = HashSet::with_capacity(count.min(MAX_PREALLOC));
    for record in 0..header.count {
        let at = cur.offset;
        let mut len = [0u8; 2];
        if !cur.fill(&mut len)? {
            return Err(malformed(at, format!("id table truncated at record {record}")));
        }
        let mut bytes = vec![0u8; u16::from_le_bytes(len) as usize];
        if !cur.fill(&mut bytes)? {
            return Err(malformed(at, format!("id table truncated at record {record}")));
        }
        let id = String::from_utf8(bytes).map_err(|_| malformed(at, format!("record {record}: id is not UTF-8")))?;
        if id.is_empty() {
            return Err(malformed(at, format!("record {record}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(XmebError::DuplicateId { record, offset: at, id });
        }
        ids.push(id);
    }
    drop(seen);

    let payload_start = cur.offset;
    let row_bytes = 4 * header.dim as u64;
    let payload = header.count * row_bytes;
    if let Some(total) = options.len {
        let available = total.saturating_sub(payload_start);
        if available < payload {
            let record = available / row_bytes;
            return Err(XmebError::DimensionMismatch {
                record,
                offset: payload_start + record * row_bytes,
            });
        }
        if available > payload {
            return Err(XmebError::DimensionMismatch {
                record: header.count,
                offset: payload_start + payload,
            });
        }
    }
    let cells = count * dim;
    let mut rows: Vec<f64> = Vec::with_capacity(if options.len.is_some() {
        cells
    } else {
        cells.min(MAX_PREALLOC)
    });
    let mut buf = vec![0u8; row_bytes as usize];
    for record in 0..header.count {
        let at = cur.offset;
        if !cur.fill(&mut buf)? {
            return Err(XmebError::DimensionMismatch { record, offset: at });
        }
        let mut sq = 0.0f64;
        for (column, b) in buf.chunks_exact(4).enumerate() {
            let v = f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes")));
            if !v.is_finite() {
                return Err(XmebError::NonFiniteValue {
                    record,
                    column: column as u64,
                    offset: at + 4 * column as u64,
                });
            }
            sq += v * v;
            rows.push(v);
        }
        if sq.sqrt() <= MIN_NORM {
            return Err(XmebError::ZeroNormRow { record, offset: at });
        }
    }
    let end = cur.offset;
    if cur.fill(&mut [0u8; 1])? {
        return Err(XmebError::DimensionMismatch {
            record: header.count,
            offset: end,
        });
    }
    EmbeddingSet::new(header.source, header.modality, ids, dim, rows)
        .map_err(|e| from_corpus(e, payload_start, row_bytes))
}

// Everything the set constructor checks has been checked above, so this is
// only reachable through inconsistent inputs.
fn from_corpus(e: CorpusError, payload_start: u64, row_bytes: u64) -> XmebError {
    match e {
        CorpusError::DuplicateId { record, id } => XmebError::DuplicateId {
            record: record as u64,
            offset: 0,
            id,
        },
        CorpusError::NonFiniteValue { record, column } => XmebError::NonFiniteValue {
            record: record as u64,
            column: column as u64,
            offset: payload_start + record as u64 * row_bytes + 4 * column as u64,
        },
        other => malformed(0, other.to_string()),
    }
}

/// Reads `path`, checking that its tags match `source` and `modality`.
pub fn ingest(path: &Path, source: Source, modality: Modality) -> Result<EmbeddingSet, XmebError> {
    read_path(
        path,
        ReadOptions {
            source: Some(source),
            modality: Some(modality),
            len: None,
        },
    )
}

/// Reads `path` with whatever tags it carries.
pub fn read_path(path: &Path, options: ReadOptions) -> Result<EmbeddingSet, XmebError> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    read(
        BufReader::with_capacity(1 << 16, file),
        ReadOptions {
            len: Some(len),
            ..options
        },
    )
}

/// Serializes `set`. Values are narrowed to `f32`.
pub fn write<W: Write>(out: W, set: &EmbeddingSet) -> Result<(), XmebError> {
    let mut w = BufWriter::with_capacity(1 << 16, out);
    let dim = u32::try_from(set.dim()).map_err(|_| XmebError::Unwritable("dimension exceeds u32".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[set.source().tag(), set.modality().tag()])?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    for id in set.ids() {
        let len = u16::try_from(id.len()).map_err(|_| XmebError::Unwritable(format!("id of {} bytes", id.len())))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    for &v in set.as_flat() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_path(path: &Path, set: &EmbeddingSet) -> Result<(), XmebError> {
    write(File::create(path)?, set)
}
