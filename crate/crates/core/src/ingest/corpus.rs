//! Labeled corpora described by a tab-separated manifest.
//!
//! ```text
//! # corpus: tls-synthetic
//! positive	<sha256>	streams/tls-0000.bin	tls
//! negative	<sha256>	streams/filler-0000.bin
//! ```
//!
//! Paths are relative to the manifest. A missing file or a checksum
//! mismatch fails that entry only.

#![allow(clippy::tabs_in_doc_comments)]

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_streams, ReassemblyOptions, StreamRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "positive" | "pos" | "1" => Ok(Label::Positive),
            "negative" | "neg" | "0" => Ok(Label::Negative),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub label: Label,
    pub sha256: String,
    /// As written in the manifest.
    pub path: PathBuf,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LabeledStream {
    pub label: Label,
    pub tags: Vec<String>,
    pub stream: StreamRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusFailure {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub name: Option<String>,
    pub streams: Vec<LabeledStream>,
    pub failures: Vec<CorpusFailure>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<(Option<String>, Vec<CorpusEntry>)> {
    let mut name = None;
    let mut entries = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let err = |message: String| Error::Manifest {
            path: path.to_path_buf(),
            line: index + 1,
            message,
        };
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("corpus:") {
                name = Some(n.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(err(format!("expected 3 or 4 tab-separated fields, found {}", fields.len())));
        }
        let label = fields[0].trim().parse().map_err(err)?;
        let sha256 = fields[1].trim().to_ascii_lowercase();
        if sha256.len() != 64 || !sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(err(format!("`{}` is not a sha256 digest", fields[1])));
        }
        let tags = fields
            .get(3)
            .map(|t| t.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect())
            .unwrap_or_default();
        entries.push(CorpusEntry {
            label,
            sha256,
            path: PathBuf::from(fields[2].trim()),
            tags,
        });
    }
    Ok((name, entries))
}

/// Loads every entry of a manifest. Capture entries contribute one stream
/// per reassembled flow, all carrying the entry's label.
pub fn load_corpus(manifest: &Path, options: &ReassemblyOptions) -> Result<CorpusLoad> {
    let text = fs::read_to_string(manifest)?;
    let (name, entries) = parse_manifest(manifest, &text)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut streams = Vec::new();
    let mut failures = Vec::new();
    for entry in entries {
        let full = base.join(&entry.path);
        let fail = |message: String| CorpusFailure {
            path: entry.path.clone(),
            message,
        };
        let bytes = match fs::read(&full) {
            Ok(b) => b,
            Err(e) => {
                failures.push(fail(e.to_string()));
                continue;
            }
        };
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            failures.push(fail(format!("checksum mismatch: manifest {}, file {digest}", entry.sha256)));
            continue;
        }
        match read_streams(&full, options) {
            Ok(found) => streams.extend(found.into_iter().map(|mut stream| {
                if stream.endpoints.is_none() {
                    stream.id = entry.path.display().to_string();
                }
                LabeledStream {
                    label: entry.label,
                    tags: entry.tags.clone(),
                    stream,
                }
            })),
            Err(e) => failures.push(fail(e.to_string())),
        }
    }
    Ok(CorpusLoad { name, streams, failures })
}

pub fn write_manifest(name: Option<&str>, entries: &[CorpusEntry]) -> String {
    let mut out = String::new();
    if let Some(name) = name {
        out.push_str(&format!("# corpus: {name}\n"));
    }
    for e in entries {
        out.push_str(&format!("{}\t{}\t{}", e.label, e.sha256, e.path.display()));
        if !e.tags.is_empty() {
            out.push('\t');
            out.push_str(&e.tags.join(","));
        }
        out.push('\n');
    }
    out
}
