//! Per-item probability vectors in JSON Lines form:
//! `{"id": "g1", "p": [0.25, 0.75]}`. Weights are normalized on load.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use xmf_core::genmetrics::ProbVector;

#[derive(Debug, thiserror::Error)]
pub enum ProbsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    p: Vec<f64>,
}

pub fn parse<R: BufRead>(input: R) -> Result<BTreeMap<String, ProbVector>, ProbsError> {
    let mut out = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = |message: String| ProbsError::Parse { line: line_no, message };
        let rec: Line = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let p = ProbVector::new(rec.p).map_err(|e| bad(e.to_string()))?;
        if out.contains_key(&rec.id) {
            return Err(ProbsError::DuplicateId {
                line: line_no,
                id: rec.id,
            });
        }
        out.insert(rec.id, p);
    }
    Ok(out)
}

pub fn read_path(path: &Path) -> Result<BTreeMap<String, ProbVector>, ProbsError> {
    parse(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_rejects() {
        let m = parse(&b"{\"id\":\"a\",\"p\":[1,3]}\n"[..]).unwrap();
        assert_eq!(m["a"].as_slice(), &[0.25, 0.75]);
        assert!(matches!(
            parse(&b"{\"id\":\"a\",\"p\":[-1]}"[..]),
            Err(ProbsError::Parse { line: 1, .. })
        ));
        let dup = b"{\"id\":\"a\",\"p\":[1]}\n{\"id\":\"a\",\"p\":[1]}\n";
        assert!(matches!(parse(&dup[..]), Err(ProbsError::DuplicateId { line: 2, .. })));
    }
}
