//! Item metadata in JSON Lines form, one object per line:
//! `{"id": "w1", "style": "Expressionism"}`. Unknown fields are ignored;
//! blank lines and `#` comment lines are skipped.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use xmf_core::ItemMetadata;

#[derive(Debug, thiserror::Error)]
pub enum MetadataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing id")]
    MissingId { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MetadataError {
    pub fn code(&self) -> &'static str {
        match self {
            MetadataError::Parse { .. } => "parse-error",
            MetadataError::MissingId { .. } => "missing-id",
            MetadataError::Io(_) => "io",
        }
    }
}

#[derive(Deserialize)]
struct Line {
    id: Option<String>,
    style: Option<String>,
    genre: Option<String>,
    similarity_score: Option<f64>,
}

pub fn parse<R: BufRead>(input: R) -> Result<Vec<ItemMetadata>, MetadataError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let rec: Line = serde_json::from_str(&text).map_err(|e| MetadataError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let id = rec
            .id
            .filter(|id| !id.is_empty())
            .ok_or(MetadataError::MissingId { line: line_no })?;
        out.push(ItemMetadata {
            id,
            style: rec.style,
            genre: rec.genre,
            similarity_score: rec.similarity_score,
        });
    }
    Ok(out)
}

pub fn read_path(path: &Path) -> Result<Vec<ItemMetadata>, MetadataError> {
    parse(BufReader::new(File::open(path)?))
}
