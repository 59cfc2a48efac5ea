//! The detection pipeline: scan, binarize, vote, filter and run-length
//! encode.
//!
//! ```text
//! stream ─┬─ window_scan(τ=1) ─ binarize(θ₁) ─┐
//!         ├─ window_scan(τ=4) ─ binarize(θ₄) ─┼─ vote (AND) ─ filter_noise(ξ) ─ run_length
//!         └─ window_scan(τ=8) ─ binarize(θ₈) ─┘
//! ```

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationRecord, CalibrationTable};
use crate::entropy::{measure_set_label, window_scan, EntropySeries, TauMeasure, MAX_WINDOW, MIN_WINDOW};
use crate::fingerprint::{MatchResult, Matcher};
use crate::ingest::StreamRecord;
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 32;
pub const DEFAULT_XI: usize = 9;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Low,
    High,
}

impl Sign {
    pub fn from_label(label: bool) -> Sign {
        if label {
            Sign::High
        } else {
            Sign::Low
        }
    }

    pub fn is_high(self) -> bool {
        self == Sign::High
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::High => '1',
            Sign::Low => '0',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    PerMeasure,
    Voted,
    Filtered { xi: usize },
}

/// Per-window high/low verdicts for one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSequence {
    pub stream_id: String,
    pub window: usize,
    pub measures: Vec<TauMeasure>,
    pub labels: Vec<bool>,
    pub stage: Stage,
}

impl LabelSequence {
    /// Builds a sequence from a `0`/`1` string; any other character is
    /// ignored.
    pub fn from_bits(stream_id: &str, window: usize, bits: &str, stage: Stage) -> Self {
        LabelSequence {
            stream_id: stream_id.to_string(),
            window,
            measures: Vec::new(),
            labels: bits.chars().filter_map(|c| match c {
                '1' => Some(true),
                '0' => Some(false),
                _ => None,
            }).collect(),
            stage,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn high_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
    }

    /// The measure set this sequence was derived from, e.g. `1-4-8`.
    pub fn measure_label(&self) -> String {
        measure_set_label(&self.measures)
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.labels
            .iter()
            .try_for_each(|&l| f.write_str(if l { "1" } else { "0" }))
    }
}

/// A maximal run of equal labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRun {
    pub sign: Sign,
    pub len: usize,
    pub start: usize,
}

impl UnitRun {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// `labels[i] = values[i] > θ`.
pub fn binarize(series: &EntropySeries, record: &CalibrationRecord) -> Result<LabelSequence> {
    if series.window_bytes != record.window_bytes || series.tau != record.tau {
        return Err(Error::Config(format!(
            "series (N = {}, τ = {}) does not match calibration (N = {}, τ = {})",
            series.window_bytes, series.tau, record.window_bytes, record.tau
        )));
    }
    Ok(LabelSequence {
        stream_id: String::new(),
        window: series.window_bytes,
        measures: vec![series.tau],
        labels: series.values.iter().map(|&v| v > record.theta).collect(),
        stage: Stage::PerMeasure,
    })
}

/// Pointwise AND of several label sequences.
pub fn vote(per_measure: &[LabelSequence]) -> Result<LabelSequence> {
    let (first, rest) = per_measure
        .split_first()
        .ok_or_else(|| Error::Config("voting needs at least one measure".into()))?;
    let mut out = first.clone();
    for seq in rest {
        if seq.labels.len() != out.labels.len() || seq.window != out.window || seq.stream_id != out.stream_id {
            return Err(Error::Config(format!(
                "cannot vote over sequences of {} and {} labels (windows {} / {})",
                out.labels.len(),
                seq.labels.len(),
                out.window,
                seq.window
            )));
        }
        out.labels
            .iter_mut()
            .zip(&seq.labels)
            .for_each(|(a, &b)| *a &= b);
        out.measures.extend(&seq.measures);
    }
    out.measures.sort();
    out.measures.dedup();
    out.stage = Stage::Voted;
    Ok(out)
}

/// Relabels every high run of length `<= xi` as low. Low runs are never
/// touched, including at the sequence boundaries.
pub fn filter_noise(seq: &LabelSequence, xi: usize) -> LabelSequence {
    let mut out = seq.clone();
    for run in run_length(&seq.labels) {
        if run.sign.is_high() && run.len <= xi {
            out.labels[run.start..run.end()].fill(false);
        }
    }
    out.stage = Stage::Filtered { xi };
    out
}

/// Maximal-run decomposition.
pub fn run_length(labels: &[bool]) -> Vec<UnitRun> {
    let mut runs: Vec<UnitRun> = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.sign == Sign::from_label(label) => run.len += 1,
            _ => runs.push(UnitRun {
                sign: Sign::from_label(label),
                len: 1,
                start: i,
            }),
        }
    }
    runs
}

/// Inverse of [`run_length`].
pub fn expand_runs(runs: &[UnitRun]) -> Vec<bool> {
    runs.iter()
        .flat_map(|run| std::iter::repeat_n(run.sign.is_high(), run.len))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window: usize,
    pub measures: Vec<TauMeasure>,
    pub xi: usize,
    pub confidence: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: DEFAULT_WINDOW,
            measures: vec![TauMeasure::ONE, TauMeasure::FOUR, TauMeasure::EIGHT],
            xi: DEFAULT_XI,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < MIN_WINDOW {
            return Err(Error::WindowTooSmall(self.window));
        }
        if self.window > MAX_WINDOW {
            return Err(Error::WindowTooLarge(self.window));
        }
        if self.measures.is_empty() {
            return Err(Error::Config("at least one measure is required".into()));
        }
        if !(0.9..1.0).contains(&self.confidence) {
            return Err(Error::Config(format!(
                "confidence floor {} outside [0.9, 1)",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Everything the pipeline produced for one stream.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub stream_id: String,
    pub stream_len: usize,
    pub config: DetectorConfig,
    pub thresholds: Vec<CalibrationRecord>,
    #[serde(skip)]
    pub series: Vec<EntropySeries>,
    #[serde(skip)]
    pub per_measure: Vec<LabelSequence>,
    #[serde(skip)]
    pub voted: LabelSequence,
    #[serde(skip)]
    pub filtered: LabelSequence,
    pub runs: Vec<UnitRun>,
    pub matches: Vec<MatchResult>,
    pub diagnostic: Option<String>,
}

impl ScanReport {
    pub fn high_runs(&self) -> impl Iterator<Item = &UnitRun> {
        self.runs.iter().filter(|r| r.sign.is_high())
    }

    /// Runs every matcher against the filtered labels.
    pub fn with_matches(mut self, matchers: &[Matcher]) -> Self {
        self.matches = matchers
            .iter()
            .map(|m| m.match_labels(&self.filtered))
            .collect();
        self
    }

    pub fn matched(&self, fingerprint: &str) -> Option<bool> {
        self.matches
            .iter()
            .find(|m| m.fingerprint == fingerprint)
            .map(|m| m.matched)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// Per-window CSV: index, one entropy column per measure, voted and
    /// filtered labels.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        write!(out, "index")?;
        for s in &self.series {
            write!(out, ",entropy_tau{}", s.tau)?;
        }
        writeln!(out, ",voted,filtered")?;
        for i in 0..self.filtered.labels.len() {
            write!(out, "{i}")?;
            for s in &self.series {
                write!(out, ",{:.6}", s.values[i])?;
            }
            writeln!(
                out,
                ",{},{}",
                self.voted.labels[i] as u8, self.filtered.labels[i] as u8
            )?;
        }
        Ok(())
    }

    /// Square-wave rendering of the filtered labels, at most `width`
    /// columns. A column is drawn high when any window it covers is high.
    pub fn square_wave(&self, width: usize) -> String {
        square_wave(&self.filtered.labels, width)
    }
}

pub fn square_wave(labels: &[bool], width: usize) -> String {
    if labels.is_empty() || width == 0 {
        return String::new();
    }
    let per_column = labels.len().div_ceil(width);
    labels
        .chunks(per_column)
        .map(|chunk| if chunk.iter().any(|&l| l) { '█' } else { '▁' })
        .collect()
}

/// A configured pipeline with its calibration resolved.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    records: Vec<CalibrationRecord>,
}

impl Detector {
    pub fn new(config: DetectorConfig, table: &CalibrationTable) -> Result<Self> {
        config.validate()?;
        let records = config
            .measures
            .iter()
            .map(|&tau| {
                table.get(tau, config.window).cloned().ok_or_else(|| {
                    Error::Config(format!(
                        "no calibration record for τ = {tau}, N = {}",
                        config.window
                    ))
                })
            })
            .collect::<Result<Vec<CalibrationRecord>>>()?;
        if let Some(r) = records.iter().find(|r| r.rho < config.confidence) {
            return Err(Error::Config(format!(
                "calibration record for τ = {}, N = {} has ρ = {:.4}, below the floor {}",
                r.tau, r.window_bytes, r.rho, config.confidence
            )));
        }
        Ok(Detector { config, records })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn thresholds(&self) -> &[CalibrationRecord] {
        &self.records
    }

    pub fn scan(&self, stream: &StreamRecord) -> ScanReport {
        self.scan_bytes(&stream.id, &stream.payload)
    }

    pub fn scan_bytes(&self, stream_id: &str, payload: &[u8]) -> ScanReport {
        let window = self.config.window;
        let series: Vec<EntropySeries> = self
            .records
            .iter()
            .map(|r| window_scan(payload, window, r.tau).expect("window validated"))
            .collect();
        let per_measure: Vec<LabelSequence> = series
            .iter()
            .zip(&self.records)
            .map(|(s, r)| {
                let mut seq = binarize(s, r).expect("records resolved for this window");
                seq.stream_id = stream_id.to_string();
                seq
            })
            .collect();
        let voted = vote(&per_measure).expect("sequences share stream and length");
        let filtered = filter_noise(&voted, self.config.xi);
        let runs = run_length(&filtered.labels);
        let diagnostic = (payload.len() < window).then(|| {
            format!(
                "stream of {} bytes is shorter than the {window}-byte window",
                payload.len()
            )
        });
        ScanReport {
            stream_id: stream_id.to_string(),
            stream_len: payload.len(),
            config: self.config.clone(),
            thresholds: self.records.clone(),
            series,
            per_measure,
            voted,
            filtered,
            runs,
            matches: Vec::new(),
            diagnostic,
        }
    }
}

/// One-shot pipeline over a stream, optionally matching fingerprints.
pub fn scan_stream(stream: &StreamRecord, config: &DetectorConfig, table: &CalibrationTable, matchers: &[Matcher]) -> Result<ScanReport> {
    let detector = Detector::new(config.clone(), table)?;
    Ok(detector.scan(stream).with_matches(matchers))
}
