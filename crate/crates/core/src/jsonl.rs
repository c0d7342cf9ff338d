//! Line-delimited JSON helpers shared by every artifact writer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl JsonlError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        JsonlError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Writes one compact JSON record per line, replacing the file atomically.
pub fn write<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let tmp = path.with_extension("jsonl.tmp");
    let file = File::create(&tmp).map_err(|e| JsonlError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(out, "{line}").map_err(|e| JsonlError::io(path, e))?;
    }
    out.flush().map_err(|e| JsonlError::io(path, e))?;
    drop(out);
    std::fs::rename(&tmp, path).map_err(|e| JsonlError::io(path, e))
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let text = std::fs::read_to_string(path).map_err(|e| JsonlError::io(path, e))?;
    parse_lines(&text)
}

/// Blank lines are skipped; line numbers are 1-based.
pub fn parse_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| JsonlError::Parse { line: i + 1, source })
        })
        .collect()
}

/// Writes pretty JSON (used for manifests, checkpoints, reports).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    let tmp = path.with_extension("json.tmp");
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(&tmp, text).map_err(|e| JsonlError::io(path, e))?;
    std::fs::rename(&tmp, path).map_err(|e| JsonlError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, JsonlError> {
    let text = std::fs::read_to_string(path).map_err(|e| JsonlError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| JsonlError::Parse {
        line: 0,
        source,
    })
}
