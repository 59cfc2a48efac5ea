//! Fingerprinting of cryptographic key-exchange protocols by the layout of
//! high-entropy blocks in reassembled TCP stream payloads.
//!
//! The pipeline slides a fixed-size byte window over a stream, estimates the
//! sample entropy of every window under several symbol widths, compares each
//! estimate against a Monte-Carlo calibrated cutoff, ANDs the per-width
//! verdicts, removes short high-entropy islands and finally matches the
//! resulting 0/1 string against interval-quantified fingerprints such as
//! `1{8,54}0{20,1024}1{8,54}0{30,800}1{80,260}`.
//!
//! ```
//! use kexprint::calibration::CalibrationTable;
//! use kexprint::detector::{Detector, DetectorConfig};
//! use kexprint::fingerprint::{AnchorMode, Fingerprint};
//! use kexprint::synth;
//!
//! let config = DetectorConfig::default();
//! let table = CalibrationTable::compute(&[config.window], &config.measures, 10_000, 7, config.confidence)?;
//! let detector = Detector::new(config, &table)?;
//!
//! let nugache = Fingerprint::parse("nugache", AnchorMode::Exact, "1{1,1000000}")?.compile();
//! let (stream, _truth) = synth::gen_nugache_like(3, 1024)?;
//! let report = detector.scan(&stream).with_matches(&[nugache]);
//! assert!(report.runs.len() >= 1);
//! # Ok::<(), kexprint::Error>(())
//! ```

pub mod calibration;
pub mod cli;
pub mod detector;
pub mod entropy;
mod error;
pub mod fingerprint;
pub mod ingest;
pub mod synth;

pub use error::{Error, Result};

// Book chapters are compiled as doc-tests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/fingerprints.md")]
    mod fingerprints {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
