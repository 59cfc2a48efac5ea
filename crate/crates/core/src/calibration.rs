//! Monte-Carlo baselines for uniformly random windows, cutoff selection and
//! empirical unit-length ranges.
//!
//! The baseline draws `K` independent random strings, takes their sample
//! entropy and summarizes the distribution by its mean `μ` and population
//! standard deviation `σ`. A cutoff `θ = μ − t·σ` is then chosen with the
//! smallest `t` on a 0.1 grid whose confidence `ρ`, the fraction of baseline
//! samples strictly above `θ`, reaches the requested floor.
//!
//! Sampling is split into fixed chunks of [`CHUNK_SAMPLES`] draws. Chunk `c`
//! uses a ChaCha20 generator seeded with the run seed on stream `c`, so the
//! result is independent of how many worker threads take part.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{run_length, LabelSequence};
use crate::entropy::{entropy_from_counts, TauMeasure, MIN_WINDOW};
use crate::{Error, Result};

pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 7;
pub const CHUNK_SAMPLES: usize = 1024;

const TABLE_MAGIC: &str = "# kexprint-calibration v1";

/// Empirical distribution of sample entropy over uniformly random inputs.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub tau: TauMeasure,
    /// Window size in bytes, `None` for symbol-level baselines whose sample
    /// size is not a whole number of bytes.
    pub window_bytes: Option<usize>,
    pub symbols: usize,
    pub num_samples: usize,
    pub seed: u64,
    pub mu: f64,
    pub sigma: f64,
    sorted: Vec<f64>,
}

impl Baseline {
    /// Fraction of samples strictly above `theta`.
    pub fn fraction_above(&self, theta: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&v| v <= theta);
        (self.sorted.len() - at_or_below) as f64 / self.sorted.len() as f64
    }

    pub fn standard_error(&self) -> f64 {
        self.sigma / (self.num_samples as f64).sqrt()
    }

    /// Sorted sample entropies.
    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Builds a baseline from precomputed sample entropies.
    pub fn from_samples(tau: TauMeasure, window_bytes: Option<usize>, seed: u64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSamples { min: 1, got: 0 });
        }
        let k = values.len() as f64;
        let mu = values.iter().sum::<f64>() / k;
        let sigma = (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / k).sqrt();
        let mut sorted = values;
        sorted.sort_by(f64::total_cmp);
        Ok(Baseline {
            tau,
            symbols: window_bytes.map_or(0, |n| tau.symbols_per_window(n)),
            window_bytes,
            num_samples: sorted.len(),
            seed,
            mu,
            sigma,
            sorted,
        })
    }
}

/// Monte-Carlo baseline for `window`-byte strings under `tau`.
pub fn sample_uniform_baseline(window: usize, tau: TauMeasure, samples: usize, seed: u64) -> Result<Baseline> {
    if window < MIN_WINDOW {
        return Err(Error::WindowTooSmall(window));
    }
    let mut baseline = sample_symbol_baseline(tau.symbols_per_window(window), tau, samples, seed)?;
    baseline.window_bytes = Some(window);
    Ok(baseline)
}

/// Monte-Carlo baseline for strings of `symbols` uniform τ-bit symbols.
///
/// Each sample is drawn as whole random bytes that are split MSB-first,
/// keeping the first `symbols` symbols; for byte-aligned sizes this is the
/// same draw as [`sample_uniform_baseline`].
pub fn sample_symbol_baseline(symbols: usize, tau: TauMeasure, samples: usize, seed: u64) -> Result<Baseline> {
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    if symbols == 0 {
        return Err(Error::Domain("baseline needs at least one symbol per sample".into()));
    }
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let count = CHUNK_SAMPLES.min(samples - chunk * CHUNK_SAMPLES);
            sample_chunk(symbols, tau, count, seed, chunk as u64)
        })
        .collect();
    let mut baseline = Baseline::from_samples(tau, None, seed, values)?;
    baseline.symbols = symbols;
    Ok(baseline)
}

fn sample_chunk(symbols: usize, tau: TauMeasure, count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let bits = tau.bits() as usize;
    let nbytes = (symbols * bits).div_ceil(8);
    let whole_bytes = symbols * bits / 8;
    let mut buf = vec![0u8; nbytes];
    let mut counts = vec![0u32; tau.alphabet_size()];
    let mask = (tau.alphabet_size() - 1) as u8;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        rng.fill_bytes(&mut buf);
        counts.iter_mut().for_each(|c| *c = 0);
        match bits {
            8 => buf.iter().for_each(|&b| counts[b as usize] += 1),
            1 => {
                let ones: u32 = buf[..whole_bytes].iter().map(|b| b.count_ones()).sum();
                counts[1] = ones;
                counts[0] = (whole_bytes * 8) as u32 - ones;
            }
            _ => {
                for &b in &buf[..whole_bytes] {
                    let mut shift = 8 - bits;
                    loop {
                        counts[((b >> shift) & mask) as usize] += 1;
                        if shift == 0 {
                            break;
                        }
                        shift -= bits;
                    }
                }
            }
        }
        // Trailing partial byte: leading symbols of the last byte.
        let leftover = symbols - whole_bytes * 8 / bits;
        if leftover > 0 {
            let b = buf[nbytes - 1];
            for j in 0..leftover {
                let shift = 8 - bits * (j + 1);
                counts[((b >> shift) & mask) as usize] += 1;
            }
        }
        out.push(entropy_from_counts(&counts).expect("non-empty sample"));
    }
    out
}

/// Cutoff and confidence for one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub tau: TauMeasure,
    pub window_bytes: usize,
    pub mu: f64,
    pub sigma: f64,
    pub t: f64,
    pub theta: f64,
    pub rho: f64,
    pub num_samples: usize,
    pub seed: u64,
}

/// Record for an explicit deviation multiplier `t`.
pub fn threshold_at(baseline: &Baseline, t: f64) -> CalibrationRecord {
    let theta = baseline.mu - t * baseline.sigma;
    CalibrationRecord {
        tau: baseline.tau,
        window_bytes: baseline.window_bytes.unwrap_or(0),
        mu: baseline.mu,
        sigma: baseline.sigma,
        t,
        theta,
        rho: baseline.fraction_above(theta),
        num_samples: baseline.num_samples,
        seed: baseline.seed,
    }
}

/// Picks the smallest `t ∈ {0.1, …, 9.9}` whose confidence reaches
/// `target_rho`, falling back to a 0.01 grid when the coarse grid has no
/// solution.
pub fn derive_threshold(baseline: &Baseline, target_rho: f64) -> Result<CalibrationRecord> {
    if !(0.9..1.0).contains(&target_rho) {
        return Err(Error::Config(format!(
            "confidence floor {target_rho} outside [0.9, 1)"
        )));
    }
    let coarse = (1..=99).map(|k| k as f64 / 10.0);
    let fine = (1..=999).map(|k| k as f64 / 100.0);
    let record = coarse
        .map(|t| threshold_at(baseline, t))
        .find(|r| r.rho >= target_rho)
        .or_else(|| fine.map(|t| threshold_at(baseline, t)).find(|r| r.rho >= target_rho))
        .ok_or_else(|| {
            Error::Calibration(format!(
                "no t up to 9.99 reaches confidence {target_rho} (τ = {}, μ = {}, σ = {})",
                baseline.tau, baseline.mu, baseline.sigma
            ))
        })?;
    let upper = baseline
        .window_bytes
        .map_or(f64::INFINITY, |n| baseline.tau.max_entropy(n));
    if !(record.theta > 0.0 && record.theta < upper) {
        return Err(Error::Calibration(format!(
            "cutoff {} falls outside (0, {upper})",
            record.theta
        )));
    }
    Ok(record)
}

/// A set of calibration records, keyed by `(τ, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub seed: u64,
    pub num_samples: usize,
    pub records: Vec<CalibrationRecord>,
}

impl CalibrationTable {
    /// Calibrates every `(window, τ)` combination.
    pub fn compute(windows: &[usize], measures: &[TauMeasure], samples: usize, seed: u64, confidence: f64) -> Result<Self> {
        let mut records = Vec::with_capacity(windows.len() * measures.len());
        for &window in windows {
            for &tau in measures {
                let baseline = sample_uniform_baseline(window, tau, samples, seed)?;
                records.push(derive_threshold(&baseline, confidence)?);
            }
        }
        Ok(CalibrationTable {
            seed,
            num_samples: samples,
            records,
        })
    }

    pub fn get(&self, tau: TauMeasure, window: usize) -> Option<&CalibrationRecord> {
        self.records
            .iter()
            .find(|r| r.tau == tau && r.window_bytes == window)
    }

    /// Machine-readable form: a version/seed/K header followed by one
    /// tab-separated record per line.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{TABLE_MAGIC}").unwrap();
        writeln!(out, "# seed: {}", self.seed).unwrap();
        writeln!(out, "# samples: {}", self.num_samples).unwrap();
        writeln!(out, "tau\twindow\tmu\tsigma\tt\ttheta\trho").unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.tau, r.window_bytes, r.mu, r.sigma, r.t, r.theta, r.rho
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::CalibrationTable { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, TABLE_MAGIC)) => {}
            _ => return Err(err(1, format!("expected `{TABLE_MAGIC}` header"))),
        }
        let mut seed = None;
        let mut samples = None;
        let mut records = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() || line.starts_with("tau\t") {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("seed:") {
                    seed = Some(v.trim().parse().map_err(|_| err(lineno, "bad seed".into()))?);
                } else if let Some(v) = comment.strip_prefix("samples:") {
                    samples = Some(v.trim().parse().map_err(|_| err(lineno, "bad sample count".into()))?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 7 {
                return Err(err(lineno, format!("expected 7 fields, found {}", fields.len())));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i]
                    .parse::<f64>()
                    .map_err(|_| err(lineno, format!("field {} is not a number: `{}`", i + 1, fields[i])))
            };
            let tau: TauMeasure = fields[0].parse().map_err(|e: Error| err(lineno, e.to_string()))?;
            let window = fields[1]
                .parse::<usize>()
                .map_err(|_| err(lineno, format!("bad window `{}`", fields[1])))?;
            records.push(CalibrationRecord {
                tau,
                window_bytes: window,
                mu: num(2)?,
                sigma: num(3)?,
                t: num(4)?,
                theta: num(5)?,
                rho: num(6)?,
                num_samples: 0,
                seed: 0,
            });
        }
        let seed = seed.ok_or_else(|| err(2, "missing `# seed:` header".into()))?;
        let num_samples = samples.ok_or_else(|| err(3, "missing `# samples:` header".into()))?;
        for r in &mut records {
            r.seed = seed;
            r.num_samples = num_samples;
        }
        Ok(CalibrationTable {
            seed,
            num_samples,
            records,
        })
    }

    /// Aligned text table with columns `N | τ | m | μ | σ | t | θ | ρ`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:>6} | {:>3} | {:>4} | {:>9} | {:>8} | {:>4} | {:>8} | {:>7}",
            "N", "tau", "m", "mu", "sigma", "t", "theta", "rho"
        )
        .unwrap();
        writeln!(out, "{}", "-".repeat(71)).unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{:>6} | {:>3} | {:>4} | {:>9.5} | {:>8.5} | {:>4.2} | {:>8.4} | {:>6.2}%",
                r.window_bytes,
                r.tau,
                r.tau.alphabet_size(),
                r.mu,
                r.sigma,
                r.t,
                r.theta,
                r.rho * 100.0
            )
            .unwrap();
        }
        write!(out, "seed {} | K = {}", self.seed, self.num_samples).unwrap();
        out.push('\n');
        out
    }
}

/// Byte span of a known random field inside corpus streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub offset: usize,
    pub len: usize,
}

impl Anchor {
    /// Window indices whose window touches the anchor, clipped to
    /// `0..label_count`. Empty when the anchor lies beyond the last window.
    pub fn window_span(&self, window: usize, label_count: usize) -> std::ops::Range<usize> {
        let start = (self.offset + 1).saturating_sub(window);
        let end = (self.offset + self.len).min(label_count);
        start..end.max(start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRangeEstimate {
    pub anchor: Anchor,
    pub observed_min: usize,
    pub observed_max: usize,
    pub lo: usize,
    pub hi: usize,
    pub percentile_lo: f64,
    pub percentile_hi: f64,
    pub corpus_size: usize,
    pub misses: usize,
}

pub const DEFAULT_PERCENTILES: (f64, f64) = (0.005, 0.995);

/// Estimates the length range of the high-entropy unit produced by a known
/// random field.
///
/// For every labeled stream, the longest high run overlapping the anchor's
/// window span is taken as that stream's unit length. The returned range
/// is the `[p_lo, p_hi]` empirical percentile interval (linear
/// interpolation between order statistics) rounded outward.
pub fn estimate_unit_range(corpus: &[LabelSequence], anchor: Anchor, percentiles: (f64, f64)) -> Result<UnitRangeEstimate> {
    let (p_lo, p_hi) = percentiles;
    if corpus.is_empty() {
        return Err(Error::Domain("empty corpus".into()));
    }
    if !(0.0 <= p_lo && p_lo <= p_hi && p_hi <= 1.0) {
        return Err(Error::Config(format!("invalid percentiles ({p_lo}, {p_hi})")));
    }
    let mut lengths = Vec::with_capacity(corpus.len());
    for seq in corpus {
        let span = anchor.window_span(seq.window, seq.labels.len());
        let best = run_length(&seq.labels)
            .into_iter()
            .filter(|run| run.sign.is_high())
            .filter(|run| run.start < span.end && span.start < run.start + run.len)
            .map(|run| run.len)
            .max();
        if let Some(len) = best {
            lengths.push(len);
        }
    }
    let misses = corpus.len() - lengths.len();
    if lengths.is_empty() || misses * 2 > corpus.len() {
        return Err(Error::UnreliableRange {
            misses,
            total: corpus.len(),
        });
    }
    lengths.sort_unstable();
    let quantile = |p: f64| {
        let pos = p * (lengths.len() - 1) as f64;
        let below = pos.floor() as usize;
        let above = pos.ceil() as usize;
        let frac = pos - below as f64;
        lengths[below] as f64 + frac * (lengths[above] as f64 - lengths[below] as f64)
    };
    Ok(UnitRangeEstimate {
        anchor,
        observed_min: lengths[0],
        observed_max: lengths[lengths.len() - 1],
        lo: quantile(p_lo).floor() as usize,
        hi: quantile(p_hi).ceil() as usize,
        percentile_lo: p_lo,
        percentile_hi: p_hi,
        corpus_size: corpus.len(),
        misses,
    })
}
