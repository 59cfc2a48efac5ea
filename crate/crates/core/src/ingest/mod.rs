//! Getting byte streams in: raw files, pcap captures and labeled corpora.

mod corpus;
pub mod packet;
pub mod pcap;
pub mod reassembly;

use std::net::SocketAddrV4;
use std::path::Path;

use serde::Serialize;

pub use corpus::{load_corpus, parse_manifest, sha256_hex, write_manifest, CorpusEntry, CorpusFailure, CorpusLoad, Label, LabeledStream};
pub use pcap::{parse_pcap, write_pcap, Capture, Endianness, PcapRecord, TimestampPrecision};
pub use reassembly::{reassemble, Reassembly, ReassemblyOptions, ReassemblyStats};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamSource {
    Raw,
    Capture,
    Synthetic,
}

/// One logical byte stream: a reassembled TCP flow or a whole file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamRecord {
    pub id: String,
    #[serde(skip)]
    pub payload: Vec<u8>,
    /// (client, server) for captured flows.
    pub endpoints: Option<(SocketAddrV4, SocketAddrV4)>,
    pub client_bytes: usize,
    pub server_bytes: usize,
    pub first_timestamp_ns: Option<u64>,
    pub saw_syn: bool,
    pub complete: bool,
    pub source: StreamSource,
}

impl StreamRecord {
    pub fn from_bytes(id: impl Into<String>, payload: Vec<u8>) -> Self {
        StreamRecord {
            id: id.into(),
            client_bytes: payload.len(),
            payload,
            endpoints: None,
            server_bytes: 0,
            first_timestamp_ns: None,
            saw_syn: false,
            complete: true,
            source: StreamSource::Raw,
        }
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

/// Reads a capture file and reassembles its TCP flows.
pub fn read_pcap(path: &Path, options: &ReassemblyOptions) -> Result<(Reassembly, Vec<String>)> {
    let bytes = std::fs::read(path)?;
    let capture = parse_pcap(&bytes)?;
    let reassembly = reassemble(&capture.records, capture.linktype, options);
    Ok((reassembly, capture.warnings))
}

/// Reads a file as one raw stream named after its file name.
pub fn read_raw(path: &Path) -> Result<StreamRecord> {
    let payload = std::fs::read(path)?;
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(StreamRecord::from_bytes(id, payload))
}

/// Streams from a path: TCP flows for `.pcap` files, the whole file
/// otherwise.
pub fn read_streams(path: &Path, options: &ReassemblyOptions) -> Result<Vec<StreamRecord>> {
    if is_pcap_path(path) {
        Ok(read_pcap(path, options)?.0.streams)
    } else {
        Ok(vec![read_raw(path)?])
    }
}

pub fn is_pcap_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("pcap") | Some("cap")
    )
}
