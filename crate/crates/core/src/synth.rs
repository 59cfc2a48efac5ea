//! Seeded synthetic streams with known high-entropy spans.
//!
//! Filler is a repeating pattern over at most 16 byte values in which every
//! value occupies a short run, so a window of `N` bytes sees far fewer than
//! `2^4` distinct values and stays well under any 8-bit cutoff.

use std::fs;
use std::io::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{sha256_hex, write_manifest, CorpusEntry, Label, StreamRecord, StreamSource};
use crate::{Error, Result};

pub const FILLER_SYMBOLS: &[u8; 16] = b"abcdefghijklmnop";
pub const DEFAULT_FILLER_ALPHABET: usize = 16;
pub const DEFAULT_FILLER_PERIOD: usize = 48;
/// Filler periods must exceed the largest window a corpus is scanned with.
pub const MIN_FILLER_PERIOD: usize = 33;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Random,
    Filler,
    Literal(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub len: usize,
}

impl Segment {
    pub fn random(len: usize) -> Self {
        Segment { kind: SegmentKind::Random, len }
    }

    pub fn filler(len: usize) -> Self {
        Segment { kind: SegmentKind::Filler, len }
    }

    pub fn literal(bytes: &[u8]) -> Self {
        Segment {
            kind: SegmentKind::Literal(bytes.to_vec()),
            len: bytes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub segments: Vec<Segment>,
    pub seed: u64,
    pub filler_alphabet: usize,
    pub filler_period: usize,
}

impl StreamSpec {
    pub fn new(segments: Vec<Segment>, seed: u64) -> Self {
        StreamSpec {
            segments,
            seed,
            filler_alphabet: DEFAULT_FILLER_ALPHABET,
            filler_period: DEFAULT_FILLER_PERIOD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.segments.iter().position(|s| s.len == 0) {
            return Err(Error::Config(format!("segment {i} has zero length")));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if let SegmentKind::Literal(bytes) = &s.kind {
                if bytes.len() != s.len {
                    return Err(Error::Config(format!("literal segment {i} length mismatch")));
                }
            }
        }
        if !(1..=FILLER_SYMBOLS.len()).contains(&self.filler_alphabet) {
            return Err(Error::Config(format!(
                "filler alphabet must be 1..=16 symbols, got {}",
                self.filler_alphabet
            )));
        }
        if self.filler_period < MIN_FILLER_PERIOD || self.filler_period < self.filler_alphabet {
            return Err(Error::Config(format!(
                "filler period {} must be at least {MIN_FILLER_PERIOD} and at least the alphabet size",
                self.filler_period
            )));
        }
        Ok(())
    }
}

/// Half-open byte range of a planted random block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

impl ByteSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Window indices allowed to be high because of this span:
    /// `[start - N + 1, end)`.
    pub fn window_slack(&self, window: usize) -> Range<usize> {
        (self.start + 1).saturating_sub(window)..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub stream_id: String,
    pub generator: String,
    pub seed: u64,
    pub planted: Vec<ByteSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tls: Option<TlsGeometry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<usize>,
}

fn filler_byte(alphabet: usize, period: usize, phase: usize) -> u8 {
    FILLER_SYMBOLS[(phase % period) * alphabet / period]
}

pub fn gen_stream(spec: &StreamSpec) -> Result<(StreamRecord, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let total = spec.segments.iter().map(|s| s.len).sum();
    let mut payload = Vec::with_capacity(total);
    let mut planted = Vec::new();
    let mut phase = 0;
    for segment in &spec.segments {
        let start = payload.len();
        match &segment.kind {
            SegmentKind::Random => {
                payload.resize(start + segment.len, 0);
                rng.fill_bytes(&mut payload[start..]);
                planted.push(ByteSpan {
                    start,
                    end: start + segment.len,
                });
            }
            SegmentKind::Filler => {
                payload.extend((0..segment.len).map(|i| filler_byte(spec.filler_alphabet, spec.filler_period, phase + i)));
                phase += segment.len;
            }
            SegmentKind::Literal(bytes) => payload.extend(bytes),
        }
    }
    let id = format!("synthetic-{:016x}", spec.seed);
    let mut record = StreamRecord::from_bytes(id.clone(), payload);
    record.source = StreamSource::Synthetic;
    let truth = GroundTruth {
        stream_id: id,
        generator: "stream".into(),
        seed: spec.seed,
        planted,
        tls: None,
        key_bits: None,
    };
    Ok((record, truth))
}

/// Byte lengths of the blocks of a TLS-shaped stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlsGeometry {
    pub client_random: usize,
    pub first_gap: usize,
    pub server_random: usize,
    pub second_gap: usize,
    pub signature: usize,
    pub tail: usize,
}

/// Ranges each block length is drawn from. A random block of `L` bytes
/// yields a high run of roughly `L - N + 1` windows and a filler gap of
/// `G` bytes a low run of roughly `G + N - 1`.
pub const TLS_CLIENT_RANDOM: Range<usize> = 44..65;
pub const TLS_FIRST_GAP: Range<usize> = 48..901;
pub const TLS_SERVER_RANDOM: Range<usize> = 44..65;
pub const TLS_SECOND_GAP: Range<usize> = 48..701;
pub const TLS_SIGNATURE: Range<usize> = 128..257;
pub const TLS_TAIL: Range<usize> = 64..401;

impl TlsGeometry {
    pub fn draw(rng: &mut impl Rng) -> Self {
        TlsGeometry {
            client_random: rng.random_range(TLS_CLIENT_RANDOM),
            first_gap: rng.random_range(TLS_FIRST_GAP),
            server_random: rng.random_range(TLS_SERVER_RANDOM),
            second_gap: rng.random_range(TLS_SECOND_GAP),
            signature: rng.random_range(TLS_SIGNATURE),
            tail: rng.random_range(TLS_TAIL),
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        vec![
            Segment::random(self.client_random),
            Segment::filler(self.first_gap),
            Segment::random(self.server_random),
            Segment::filler(self.second_gap),
            Segment::random(self.signature),
            Segment::filler(self.tail),
        ]
    }
}

/// Which block [`gen_tls_violating`] pushes past its fingerprint bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TlsViolation {
    ClientRandom,
    FirstGap,
    ServerRandom,
    SecondGap,
}

/// A TLS-shaped stream decoded from a random geometry.
pub fn gen_tls_like(seed: u64) -> (StreamRecord, GroundTruth) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    gen_tls_with(seed, TlsGeometry::draw(&mut rng))
}

pub fn gen_tls_with(seed: u64, geometry: TlsGeometry) -> (StreamRecord, GroundTruth) {
    let spec = StreamSpec::new(geometry.segments(), seed ^ 0x7115_0000_0000_0000);
    let (mut record, mut truth) = gen_stream(&spec).expect("TLS geometry has positive lengths");
    record.id = format!("tls-{seed:06}");
    truth.stream_id = record.id.clone();
    truth.generator = "tls".into();
    truth.seed = seed;
    truth.tls = Some(geometry);
    (record, truth)
}

/// Like [`gen_tls_like`] but with one block well beyond its upper bound.
pub fn gen_tls_violating(seed: u64, violation: TlsViolation) -> (StreamRecord, GroundTruth) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut geometry = TlsGeometry::draw(&mut rng);
    match violation {
        TlsViolation::ClientRandom => geometry.client_random = rng.random_range(120..200),
        TlsViolation::FirstGap => geometry.first_gap = rng.random_range(1100..1400),
        TlsViolation::ServerRandom => geometry.server_random = rng.random_range(120..200),
        TlsViolation::SecondGap => geometry.second_gap = rng.random_range(860..1100),
    }
    let (mut record, mut truth) = gen_tls_with(seed, geometry);
    record.id = format!("tls-violating-{seed:06}");
    truth.stream_id = record.id.clone();
    (record, truth)
}

/// Length announcement, key and an equally long reply.
pub fn gen_nugache_like(seed: u64, key_bits: usize) -> Result<(StreamRecord, GroundTruth)> {
    if key_bits < 512 || !key_bits.is_multiple_of(8) {
        return Err(Error::Config(format!(
            "key_bits must be a multiple of 8 and at least 512, got {key_bits}"
        )));
    }
    let key_bytes = key_bits / 8;
    let announce = (key_bytes as u32).to_be_bytes();
    let spec = StreamSpec::new(
        vec![
            Segment::literal(&announce),
            Segment::random(key_bytes),
            Segment::random(key_bytes),
        ],
        seed ^ 0x4e55_0000_0000_0000,
    );
    let (mut record, mut truth) = gen_stream(&spec)?;
    record.id = format!("nugache-{key_bits}-{seed:06}");
    truth.stream_id = record.id.clone();
    truth.generator = "nugache".into();
    truth.seed = seed;
    truth.key_bits = Some(key_bits);
    Ok((record, truth))
}

pub fn gen_filler(seed: u64, len: usize) -> (StreamRecord, GroundTruth) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // start at an arbitrary phase so streams differ
    let skip = rng.random_range(1..DEFAULT_FILLER_PERIOD + 1);
    let spec = StreamSpec::new(vec![Segment::filler(skip), Segment::filler(len)], seed);
    let (mut record, mut truth) = gen_stream(&spec).expect("filler spec is valid");
    record.payload.drain(..skip);
    record.client_bytes = record.payload.len();
    record.id = format!("filler-{seed:06}");
    truth.stream_id = record.id.clone();
    truth.generator = "filler".into();
    (record, truth)
}

const WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "that", "for", "it", "as", "was", "with", "be", "by", "on", "not",
    "he", "this", "are", "or", "his", "from", "at", "which", "but", "have", "an", "had", "they", "you",
    "were", "their", "one", "all", "we", "can", "her", "has", "there", "been", "if", "more", "when",
    "will", "would", "who", "so", "no", "server", "request", "session", "message", "network", "client",
    "host", "content", "length", "accept", "connection", "keep", "alive", "text", "html", "get", "post",
];

/// Plain English-like ASCII text.
pub fn gen_ascii_text(seed: u64, len: usize) -> (StreamRecord, GroundTruth) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xa5c1_0000_0000_0000);
    let mut text = String::with_capacity(len + 16);
    let mut sentence_start = true;
    while text.len() < len {
        let word = WORDS[rng.random_range(0..WORDS.len())];
        if sentence_start {
            let mut chars = word.chars();
            let first = chars.next().unwrap().to_ascii_uppercase();
            text.push(first);
            text.push_str(chars.as_str());
            sentence_start = false;
        } else {
            text.push_str(word);
        }
        if rng.random_bool(0.1) {
            text.push_str(".\r\n");
            sentence_start = true;
        } else if rng.random_bool(0.08) {
            text.push_str(", ");
        } else {
            text.push(' ');
        }
    }
    text.truncate(len);
    let id = format!("ascii-{seed:06}");
    let mut record = StreamRecord::from_bytes(id.clone(), text.into_bytes());
    record.source = StreamSource::Synthetic;
    let truth = GroundTruth {
        stream_id: id,
        generator: "ascii".into(),
        seed,
        planted: Vec::new(),
        tls: None,
        key_bits: None,
    };
    (record, truth)
}

pub struct CorpusItem {
    pub label: Label,
    pub tags: Vec<String>,
    pub stream: StreamRecord,
    pub truth: GroundTruth,
}

/// Writes `streams/<id>.bin`, `manifest.tsv` and `truth.json` under `dir`.
/// Returns the manifest path.
pub fn write_corpus(dir: &Path, name: &str, items: &[CorpusItem]) -> Result<PathBuf> {
    let streams = dir.join("streams");
    fs::create_dir_all(&streams)?;
    let mut entries = Vec::with_capacity(items.len());
    for item in items {
        let rel = PathBuf::from("streams").join(format!("{}.bin", item.stream.id));
        fs::write(dir.join(&rel), &item.stream.payload)?;
        entries.push(CorpusEntry {
            label: item.label,
            sha256: sha256_hex(&item.stream.payload),
            path: rel,
            tags: item.tags.clone(),
        });
    }
    let manifest = dir.join("manifest.tsv");
    fs::write(&manifest, write_manifest(Some(name), &entries))?;
    let truths: Vec<&GroundTruth> = items.iter().map(|i| &i.truth).collect();
    let mut file = fs::File::create(dir.join("truth.json"))?;
    serde_json::to_writer_pretty(&mut file, &truths).map_err(|e| Error::Io(e.into()))?;
    file.write_all(b"\n")?;
    Ok(manifest)
}
