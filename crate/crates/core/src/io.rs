//! JSON-Lines files: corpus, datasets, splits, prompts and predictions.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taskgen::{CorpusEntry, Rejection, RejectionReason, Split};
use crate::tree_dsl::{parse_tree, render_tree};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<(), IoError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tree: String,
}

impl From<&CorpusEntry> for CorpusLine {
    fn from(e: &CorpusEntry) -> Self {
        Self {
            model_id: e.model_id.clone(),
            name: e.name.clone(),
            tree: render_tree(&e.tree),
        }
    }
}

/// Corpus entries whose tree parses, and rejections for those that do not.
pub fn read_corpus(path: &Path) -> Result<(Vec<CorpusEntry>, Vec<Rejection>), IoError> {
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    for line in read_jsonl::<CorpusLine>(path)? {
        match parse_tree(&line.tree) {
            Ok(tree) => entries.push(CorpusEntry {
                model_id: line.model_id,
                name: line.name,
                tree,
            }),
            Err(e) => rejected.push(Rejection {
                model_id: line.model_id,
                reason: RejectionReason::InvalidTree { message: e.to_string() },
            }),
        }
    }
    Ok((entries, rejected))
}

pub fn write_corpus(path: &Path, entries: &[CorpusEntry]) -> Result<(), IoError> {
    let lines: Vec<CorpusLine> = entries.iter().map(CorpusLine::from).collect();
    write_jsonl(path, &lines)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitLine {
    pub model_id: String,
    pub split: Split,
}
