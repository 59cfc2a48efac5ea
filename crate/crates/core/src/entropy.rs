//! Sample entropy over τ-bit symbols.
//!
//! A byte window of `N` bytes is reinterpreted as `8N/τ` symbols of `τ` bits
//! each (MSB first) and the plug-in entropy `-Σ (nᵢ/M) log2 (nᵢ/M)` is taken
//! over the observed symbol counts.
//!
//! Every entropy value produced by this module goes through one
//! finalization routine that works on an exact fixed-point accumulator of
//! `Σ nᵢ log2 nᵢ`. Because integer addition is associative, the incremental
//! sliding-window scan and a from-scratch recomputation of any window produce
//! bit-identical results.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest window accepted by [`window_scan`].
pub const MIN_WINDOW: usize = 16;
/// Largest window accepted by [`window_scan`]; keeps the sliding
/// accumulator within 64 bits.
pub const MAX_WINDOW: usize = 1 << 16;

const FIXED_BITS: i32 = 40;
const FIXED_SCALE: f64 = (1u64 << FIXED_BITS) as f64;

/// Number of bits per symbol. Always one of 1, 2, 4 or 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct TauMeasure(u8);

impl TauMeasure {
    pub const ONE: TauMeasure = TauMeasure(1);
    pub const TWO: TauMeasure = TauMeasure(2);
    pub const FOUR: TauMeasure = TauMeasure(4);
    pub const EIGHT: TauMeasure = TauMeasure(8);

    pub const ALL: [TauMeasure; 4] = [Self::ONE, Self::TWO, Self::FOUR, Self::EIGHT];

    pub fn new(tau: u32) -> Result<Self> {
        match tau {
            1 | 2 | 4 | 8 => Ok(TauMeasure(tau as u8)),
            other => Err(Error::InvalidMeasure(other)),
        }
    }

    pub fn bits(self) -> u32 {
        self.0 as u32
    }

    /// `m = 2^τ`.
    pub fn alphabet_size(self) -> usize {
        1 << self.0
    }

    pub fn symbols_per_byte(self) -> usize {
        8 / self.0 as usize
    }

    /// Sample count `8N/τ` of an `N`-byte window.
    pub fn symbols_per_window(self, window_bytes: usize) -> usize {
        window_bytes * self.symbols_per_byte()
    }

    /// Upper bound `log2 min(m, 8N/τ)` of the sample entropy of an `N`-byte window.
    pub fn max_entropy(self, window_bytes: usize) -> f64 {
        entropy_bound(self.alphabet_size(), self.symbols_per_window(window_bytes))
    }
}

impl TryFrom<u32> for TauMeasure {
    type Error = Error;

    fn try_from(tau: u32) -> Result<Self> {
        TauMeasure::new(tau)
    }
}

impl From<TauMeasure> for u32 {
    fn from(tau: TauMeasure) -> u32 {
        tau.bits()
    }
}

impl fmt::Display for TauMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for TauMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tau = s
            .trim()
            .parse::<u32>()
            .map_err(|_| Error::Config(format!("`{s}` is not a symbol width")))?;
        TauMeasure::new(tau)
    }
}

/// Parses a measure set written as `1-4-8` or `1,4,8`. Duplicates are
/// removed and the result is sorted ascending.
pub fn parse_measure_set(text: &str) -> Result<Vec<TauMeasure>> {
    let mut measures = text
        .split(['-', ','])
        .filter(|part| !part.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<TauMeasure>>>()?;
    measures.sort();
    measures.dedup();
    if measures.is_empty() {
        return Err(Error::Config("empty measure set".into()));
    }
    Ok(measures)
}

/// Renders a measure set the way the detector labels it, e.g. `1-4-8`.
pub fn measure_set_label(measures: &[TauMeasure]) -> String {
    measures
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// Splits bytes MSB-first into τ-bit symbols.
pub fn split_symbols(bytes: &[u8], tau: TauMeasure) -> Vec<u8> {
    let per_byte = tau.symbols_per_byte();
    let mut out = Vec::with_capacity(bytes.len() * per_byte);
    for &byte in bytes {
        push_symbols(byte, tau, |s| out.push(s));
    }
    out
}

/// Inverse of [`split_symbols`].
pub fn merge_symbols(symbols: &[u8], tau: TauMeasure) -> Result<Vec<u8>> {
    let per_byte = tau.symbols_per_byte();
    if !symbols.len().is_multiple_of(per_byte) {
        return Err(Error::Domain(format!(
            "{} symbols do not fill whole bytes at {tau} bits per symbol",
            symbols.len()
        )));
    }
    let m = tau.alphabet_size();
    symbols
        .chunks(per_byte)
        .map(|chunk| {
            chunk.iter().try_fold(0u16, |acc, &s| {
                if s as usize >= m {
                    return Err(Error::InvalidSymbol {
                        symbol: s as u32,
                        alphabet: m,
                    });
                }
                Ok((acc << tau.bits()) | s as u16)
            })
        })
        .map(|r| r.map(|b| b as u8))
        .collect()
}

#[inline(always)]
fn push_symbols(byte: u8, tau: TauMeasure, mut f: impl FnMut(u8)) {
    let bits = tau.0;
    if bits == 8 {
        f(byte);
        return;
    }
    let mask = (1u16 << bits) as u8 - 1;
    let mut shift = 8 - bits;
    loop {
        f((byte >> shift) & mask);
        if shift == 0 {
            break;
        }
        shift -= bits;
    }
}

/// `round(n log2 n · 2^40)`, the exact accumulator unit shared by every
/// entropy path in the crate.
fn xlog2x_fixed(n: u32) -> u128 {
    if n < 2 {
        return 0;
    }
    let n = n as f64;
    (n * n.log2() * FIXED_SCALE).round() as u128
}

fn entropy_bound(alphabet: usize, total: usize) -> f64 {
    (alphabet.min(total).max(1) as f64).log2()
}

/// Turns an accumulator value into bits for a fixed sample count.
struct Finalizer {
    log2_total: f64,
    denom: f64,
    bound: f64,
}

impl Finalizer {
    fn new(total: usize, alphabet: usize) -> Self {
        let m = total as f64;
        Finalizer {
            log2_total: m.log2(),
            denom: FIXED_SCALE * m,
            bound: entropy_bound(alphabet, total),
        }
    }

    #[inline]
    fn finish(&self, sum_fixed: f64, distinct: usize) -> f64 {
        if distinct <= 1 {
            return 0.0;
        }
        let h = self.log2_total - sum_fixed / self.denom;
        h.clamp(0.0, self.bound)
    }
}

/// Sample entropy (bits) of a symbol histogram. `counts.len()` is the
/// alphabet size.
pub fn entropy_from_counts(counts: &[u32]) -> Result<f64> {
    let mut total = 0usize;
    let mut distinct = 0usize;
    let mut sum = 0u128;
    for &c in counts {
        if c > 0 {
            total += c as usize;
            distinct += 1;
            sum += xlog2x_fixed(c);
        }
    }
    if total == 0 {
        return Err(Error::UndefinedEntropy);
    }
    Ok(Finalizer::new(total, counts.len()).finish(sum as f64, distinct))
}

/// Plug-in (maximum likelihood) entropy of `symbols` over an alphabet of
/// size `m`.
pub fn sample_entropy(symbols: &[u8], m: usize) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::UndefinedEntropy);
    }
    let mut counts = vec![0u32; m];
    for &s in symbols {
        let slot = counts.get_mut(s as usize).ok_or(Error::InvalidSymbol {
            symbol: s as u32,
            alphabet: m,
        })?;
        *slot += 1;
    }
    entropy_from_counts(&counts)
}

/// Shannon entropy of a probability vector, in bits. Zero-probability
/// entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Per-offset sample entropy of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub window_bytes: usize,
    pub tau: TauMeasure,
    pub stream_len: usize,
    pub values: Vec<f64>,
}

impl EntropySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sliding-window sample entropy with a one-byte step.
///
/// `values[i]` is the sample entropy of `stream[i..i + window]` under `tau`.
/// Streams shorter than the window produce an empty series. Each step costs
/// `O(8/τ)` regardless of the window size.
pub fn window_scan(stream: &[u8], window: usize, tau: TauMeasure) -> Result<EntropySeries> {
    if window < MIN_WINDOW {
        return Err(Error::WindowTooSmall(window));
    }
    if window > MAX_WINDOW {
        return Err(Error::WindowTooLarge(window));
    }
    let mut series = EntropySeries {
        window_bytes: window,
        tau,
        stream_len: stream.len(),
        values: Vec::new(),
    };
    if stream.len() < window {
        return Ok(series);
    }

    let alphabet = tau.alphabet_size();
    let total = tau.symbols_per_window(window);
    // inc[c] = xlog2x(c) - xlog2x(c - 1)
    let table: Vec<u64> = (0..=total as u32).map(|c| xlog2x_fixed(c) as u64).collect();
    let inc: Vec<u64> = std::iter::once(0)
        .chain(table.windows(2).map(|w| w[1] - w[0]))
        .collect();

    let fin = Finalizer::new(total, alphabet);
    series.values.reserve(stream.len() - window + 1);

    if tau == TauMeasure::ONE {
        // Two symbols: the histogram is fixed by the number of set bits.
        let mut ones: usize = stream[..window].iter().map(|b| b.count_ones() as usize).sum();
        let value = |ones: usize| {
            let distinct = (ones > 0) as usize + (ones < total) as usize;
            fin.finish((table[ones] + table[total - ones]) as f64, distinct)
        };
        series.values.push(value(ones));
        for (&outgoing, &incoming) in stream.iter().zip(&stream[window..]) {
            ones = ones + incoming.count_ones() as usize - outgoing.count_ones() as usize;
            series.values.push(value(ones));
        }
        return Ok(series);
    }

    let mut counts = vec![0u32; alphabet];
    for &byte in &stream[..window] {
        push_symbols(byte, tau, |s| counts[s as usize] += 1);
    }
    let mut distinct = counts.iter().filter(|&&c| c > 0).count();
    let mut sum: u64 = counts.iter().map(|&c| table[c as usize]).sum();
    series.values.push(fin.finish(sum as f64, distinct));

    for (&outgoing, &incoming) in stream.iter().zip(&stream[window..]) {
        if outgoing != incoming {
            push_symbols(outgoing, tau, |s| {
                let c = &mut counts[s as usize];
                sum -= inc[*c as usize];
                *c -= 1;
                if *c == 0 {
                    distinct -= 1;
                }
            });
            push_symbols(incoming, tau, |s| {
                let c = &mut counts[s as usize];
                if *c == 0 {
                    distinct += 1;
                }
                *c += 1;
                sum += inc[*c as usize];
            });
        }
        series.values.push(fin.finish(sum as f64, distinct));
    }
    Ok(series)
}

/// Probability that `n` draws from a uniform alphabet of size `m` are all
/// distinct: `∏_{i<n} (m - i) / m`.
pub fn prob_all_distinct(n: usize, m: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    if m == 0 {
        return Err(Error::Domain("alphabet size must be positive".into()));
    }
    if n > m {
        return Ok(0.0);
    }
    let m_f = m as f64;
    Ok((0..n).map(|i| (m - i) as f64 / m_f).product())
}

/// Largest alphabet accepted by [`exact_truncated_entropy`].
pub const ENUMERATION_MAX_ALPHABET: usize = 4;
/// Largest sample count accepted by [`exact_truncated_entropy`].
pub const ENUMERATION_MAX_SAMPLES: usize = 16;

/// Expected sample entropy of `n` i.i.d. draws from `p`, by enumerating
/// every composition `(n₀, …, n_{m-1})` of `n`.
///
/// Multinomial coefficients are computed exactly and only converted to
/// floating point when weighted. Intended as a test oracle, so instance
/// sizes are capped at [`ENUMERATION_MAX_ALPHABET`] and
/// [`ENUMERATION_MAX_SAMPLES`].
pub fn exact_truncated_entropy(n: usize, p: &[f64]) -> Result<f64> {
    let m = p.len();
    if n == 0 || m == 0 {
        return Err(Error::Domain("sample count and alphabet must be positive".into()));
    }
    if m > ENUMERATION_MAX_ALPHABET || n > ENUMERATION_MAX_SAMPLES {
        return Err(Error::EnumerationLimit(format!(
            "m = {m}, N = {n} (limits m <= {ENUMERATION_MAX_ALPHABET}, N <= {ENUMERATION_MAX_SAMPLES})"
        )));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
    }

    let factorials: Vec<BigUint> = std::iter::successors(Some(BigUint::one()), {
        let mut k = 0u32;
        move |prev: &BigUint| {
            k += 1;
            Some(prev * k)
        }
    })
    .take(n + 1)
    .collect();

    let mut composition = vec![0usize; m];
    let mut expectation = 0.0;
    enumerate_compositions(n, 0, &mut composition, &mut |counts| {
        let denom = counts
            .iter()
            .fold(BigUint::one(), |acc, &c| acc * &factorials[c]);
        let coefficient = (&factorials[n] / denom)
            .to_f64()
            .expect("multinomial coefficient of a capped instance fits in f64");
        let prob: f64 = counts
            .iter()
            .zip(p)
            .map(|(&c, &pi)| pi.powi(c as i32))
            .product();
        let nf = n as f64;
        let h = -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let q = c as f64 / nf;
                q * q.log2()
            })
            .sum::<f64>();
        expectation += coefficient * prob * h;
    });
    Ok(expectation)
}

fn enumerate_compositions(
    remaining: usize,
    index: usize,
    counts: &mut [usize],
    visit: &mut impl FnMut(&[usize]),
) {
    if index + 1 == counts.len() {
        counts[index] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[index] = c;
        enumerate_compositions(remaining - c, index + 1, counts, visit);
    }
}
