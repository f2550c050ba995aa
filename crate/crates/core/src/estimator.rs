//! Entropy estimates from finite symbol sequences.
//!
//! Raw bytes are mapped to symbols with a [`SymbolMap`]. Shannon entropy is
//! estimated from recurrence times of sampled windows and Rényi entropy from
//! overlapping n-gram frequencies.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Matcher, WordMatcher};
use crate::logspace::LogSumExp;
use crate::rng::{substream, Role};
use crate::stats;
use crate::word::{Symbol, Word};

/// Default ratio between sequence length and the largest window length.
pub const DEFAULT_LENGTH_MULTIPLE: usize = 64;
/// Censored fraction above which a recurrence estimate is refused.
pub const MAX_CENSORED_FRACTION: f64 = 0.05;
/// Default cap on distinct n-grams held by the plug-in estimator.
pub const DEFAULT_NGRAM_BUDGET: usize = 50_000_000;

/// Asymptotic efficiency factor of the median relative to the mean, `sqrt(pi/2)`.
const MEDIAN_SE_FACTOR: f64 = 1.2533141373155003;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("input is empty")]
    EmptyInput,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("custom symbol table has {0} entries, expected 256")]
    IncompleteTable(usize),
    #[error("sequence of length {len} is shorter than the required {required}")]
    SequenceTooShort { len: usize, required: usize },
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("no window lengths given")]
    NoWindowLengths,
    #[error("s = {0} must be positive")]
    NonPositiveS(f64),
    #[error("n = {n}: censored fraction {fraction} exceeds {limit}")]
    ExcessiveCensoring { n: usize, fraction: f64, limit: f64 },
    #[error("more than {budget} distinct n-grams")]
    BudgetExceeded { budget: usize },
}

/// Byte-to-symbol mapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolMap {
    /// One symbol per byte, `k = 256`.
    ByteIdentity,
    /// Two symbols per byte, high nibble first, `k = 16`.
    Nibble,
    /// Eight symbols per byte, most significant bit first, `k = 2`.
    Bit,
    /// One symbol per byte through an explicit table.
    CustomTable(Box<[u32; 256]>),
}

impl SymbolMap {
    /// Custom table; every byte value must have an entry.
    pub fn custom(table: &[u32]) -> Result<Self, EstimatorError> {
        let table: [u32; 256] =
            table.try_into().map_err(|_| EstimatorError::IncompleteTable(table.len()))?;
        Ok(SymbolMap::CustomTable(Box::new(table)))
    }

    /// Custom table from a byte-to-symbol map, which must be total.
    pub fn from_pairs(pairs: &HashMap<u8, u32>) -> Result<Self, EstimatorError> {
        if pairs.len() != 256 {
            return Err(EstimatorError::IncompleteTable(pairs.len()));
        }
        let mut table = [0u32; 256];
        for (&b, &s) in pairs {
            table[b as usize] = s;
        }
        Ok(SymbolMap::CustomTable(Box::new(table)))
    }

    pub fn symbols_per_byte(&self) -> usize {
        match self {
            SymbolMap::ByteIdentity | SymbolMap::CustomTable(_) => 1,
            SymbolMap::Nibble => 2,
            SymbolMap::Bit => 8,
        }
    }

    fn extend(&self, byte: u8, out: &mut Vec<Symbol>) {
        match self {
            SymbolMap::ByteIdentity => out.push(Symbol(byte as u32)),
            SymbolMap::Nibble => {
                out.push(Symbol((byte >> 4) as u32));
                out.push(Symbol((byte & 0x0f) as u32));
            }
            SymbolMap::Bit => out.extend((0..8).rev().map(|b| Symbol(((byte >> b) & 1) as u32))),
            SymbolMap::CustomTable(t) => out.push(Symbol(t[byte as usize])),
        }
    }
}

pub fn ingest_bytes(bytes: &[u8], map: &SymbolMap) -> Result<Vec<Symbol>, EstimatorError> {
    if bytes.is_empty() {
        return Err(EstimatorError::EmptyInput);
    }
    let mut out = Vec::with_capacity(bytes.len() * map.symbols_per_byte());
    for &b in bytes {
        map.extend(b, &mut out);
    }
    Ok(out)
}

pub fn ingest_path(path: impl AsRef<Path>, map: &SymbolMap) -> Result<Vec<Symbol>, EstimatorError> {
    ingest_bytes(&std::fs::read(path)?, map)
}

/// Packs binary symbols into bytes, most significant bit first; the inverse
/// of [`SymbolMap::Bit`] when the length is a multiple of eight.
pub fn pack_bits(symbols: &[Symbol]) -> Vec<u8> {
    symbols
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, s)| acc | (((s.0 & 1) as u8) << (7 - i))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "ow-recurrence")]
    OwRecurrence,
    #[serde(rename = "plugin-renyi")]
    PluginRenyi,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::OwRecurrence => "ow-recurrence",
            Method::PluginRenyi => "plugin-renyi",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub method: Method,
    pub n: usize,
    pub s: Option<f64>,
    pub estimate_nats: f64,
    pub stderr: Option<f64>,
    pub censored_fraction: f64,
    pub sample_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EstimateSeries {
    pub rows: Vec<Estimate>,
}

impl EstimateSeries {
    pub fn csv_header() -> [&'static str; 7] {
        ["method", "n", "s", "estimate_nats", "stderr", "censored_fraction", "sample_count"]
    }

    pub fn csv_rows(&self) -> Vec<[String; 7]> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        self.rows
            .iter()
            .map(|r| {
                [
                    r.method.tag().to_string(),
                    r.n.to_string(),
                    opt(r.s),
                    r.estimate_nats.to_string(),
                    opt(r.stderr),
                    r.censored_fraction.to_string(),
                    r.sample_count.to_string(),
                ]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(Self::csv_header())?;
        for row in self.csv_rows() {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, n: usize) -> Option<&Estimate> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// First `i >= 1` with `seq[start + i..][..n] == seq[start..][..n]`, or `None`
/// if the window does not recur before the sequence ends.
pub fn recurrence_in(seq: &[Symbol], start: usize, n: usize) -> Option<u64> {
    let window = Word::new(seq[start..start + n].to_vec()).expect("n >= 1");
    let matcher = WordMatcher::new(&window);
    let mut q = matcher.start();
    for (e, &sym) in seq[start + 1..].iter().enumerate() {
        q = matcher.next_state(q, sym);
        if matcher.is_match(q) {
            // window ending at offset start + 1 + e begins at start + 2 + e - n
            return Some((e + 2 - n) as u64);
        }
    }
    None
}

/// Median recurrence exponent `(1/n) log tau_n` over uniformly drawn starts,
/// with the default length multiple.
pub fn ow_entropy_estimate(
    seq: &[Symbol],
    n_list: &[usize],
    starts_per_n: usize,
    seed: u64,
) -> Result<EstimateSeries, EstimatorError> {
    ow_entropy_estimate_with(seq, n_list, starts_per_n, seed, DEFAULT_LENGTH_MULTIPLE)
}

pub fn ow_entropy_estimate_with(
    seq: &[Symbol],
    n_list: &[usize],
    starts_per_n: usize,
    seed: u64,
    length_multiple: usize,
) -> Result<EstimateSeries, EstimatorError> {
    let max_n = *n_list.iter().max().ok_or(EstimatorError::NoWindowLengths)?;
    if n_list.contains(&0) {
        return Err(EstimatorError::ZeroWindow);
    }
    let required = max_n.saturating_mul(length_multiple);
    if seq.len() < required || seq.len() < max_n + 1 {
        return Err(EstimatorError::SequenceTooShort { len: seq.len(), required });
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for (idx, &n) in n_list.iter().enumerate() {
        let mut rng = substream(seed, idx as u64, Role::Aux);
        let starts: Vec<usize> = (0..starts_per_n).map(|_| rng.random_range(0..=seq.len() - n)).collect();
        let times: Vec<Option<u64>> = starts.par_iter().map(|&o| recurrence_in(seq, o, n)).collect();
        let mut exps: Vec<f64> = times.iter().flatten().map(|&t| (t as f64).ln() / n as f64).collect();
        let censored = times.len() - exps.len();
        let fraction = censored as f64 / times.len().max(1) as f64;
        if fraction > MAX_CENSORED_FRACTION || exps.is_empty() {
            return Err(EstimatorError::ExcessiveCensoring { n, fraction, limit: MAX_CENSORED_FRACTION });
        }
        exps.sort_by(f64::total_cmp);
        let (_, se_mean) = stats::mean_and_stderr(&exps);
        rows.push(Estimate {
            method: Method::OwRecurrence,
            n,
            s: None,
            estimate_nats: stats::quantile_sorted(&exps, 0.5),
            stderr: Some(MEDIAN_SE_FACTOR * se_mean),
            censored_fraction: fraction,
            sample_count: times.len(),
        });
    }
    Ok(EstimateSeries { rows })
}

/// Overlapping n-gram counts; they sum to `len - n + 1`.
pub fn ngram_counts(seq: &[Symbol], n: usize, budget: usize) -> Result<HashMap<&[Symbol], u64>, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::ZeroWindow);
    }
    if seq.len() < n {
        return Err(EstimatorError::SequenceTooShort { len: seq.len(), required: n });
    }
    let mut counts: HashMap<&[Symbol], u64> = HashMap::new();
    for w in seq.windows(n) {
        if let Some(c) = counts.get_mut(w) {
            *c += 1;
        } else {
            if counts.len() >= budget {
                return Err(EstimatorError::BudgetExceeded { budget });
            }
            counts.insert(w, 1);
        }
    }
    Ok(counts)
}

/// `-(1/(s n)) log sum_w f(w)^(1+s)` over empirical n-gram frequencies.
pub fn plugin_renyi_estimate(seq: &[Symbol], n: usize, s: f64) -> Result<Estimate, EstimatorError> {
    plugin_renyi_estimate_with(seq, n, s, DEFAULT_NGRAM_BUDGET)
}

pub fn plugin_renyi_estimate_with(seq: &[Symbol], n: usize, s: f64, budget: usize) -> Result<Estimate, EstimatorError> {
    if !(s > 0.0) {
        return Err(EstimatorError::NonPositiveS(s));
    }
    let counts = ngram_counts(seq, n, budget)?;
    Ok(renyi_from_counts(counts.values().copied(), n, s))
}

/// Rényi functional of a count table, shared by callers that reuse one table
/// across several `s`.
pub fn renyi_from_counts(counts: impl Iterator<Item = u64>, n: usize, s: f64) -> Estimate {
    // fixed summation order, independent of hash iteration order
    let mut counts: Vec<u64> = counts.collect();
    counts.sort_unstable();
    let total: u64 = counts.iter().sum();
    let ln_total = (total as f64).ln();
    let mut acc = LogSumExp::new();
    for c in counts {
        acc.push((1.0 + s) * ((c as f64).ln() - ln_total));
    }
    // a single n-gram gives exactly zero; clamp rounding noise
    let estimate = (-acc.ln() / (s * n as f64)).max(0.0);
    Estimate {
        method: Method::PluginRenyi,
        n,
        s: Some(s),
        estimate_nats: estimate,
        stderr: None,
        censored_fraction: 0.0,
        sample_count: total as usize,
    }
}
