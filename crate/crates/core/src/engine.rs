//! Pathwise quantities along a sampled orbit.
//!
//! Index conventions: the stream's current position is `x_0`. Window `i` is
//! `x_i .. x_{i+n-1}`. Entrance times look at windows `i >= 1`; hitting
//! numbers count windows `i = 0..=M`. Every operation consumes symbols from
//! the stream and does constant work per symbol.

use thiserror::Error;

use crate::automaton::{Matcher, MultiMatcher, WordMatcher};
use crate::logspace::LogSumExp;
use crate::model::{MeasureModel, ModelError};
use crate::orbit::OrbitStream;
use crate::word::{Symbol, Word};

/// Windows between fresh recomputations of the sliding log-measure.
pub const REANCHOR_INTERVAL: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("target cylinder {0} has zero measure")]
    ZeroMeasureTarget(String),
    #[error("patterns must be non-empty words of one common length")]
    MixedLengths,
    #[error("pattern set is empty")]
    EmptyPatternSet,
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error("exponent s = {0} must be non-negative")]
    NegativeS(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of a search for the first event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeResult {
    /// Event at this step (always `>= 1`).
    Hit(u64),
    /// No event within `1..=cap`.
    Censored(u64),
}

impl TimeResult {
    pub fn hit(self) -> Option<u64> {
        match self {
            TimeResult::Hit(t) => Some(t),
            TimeResult::Censored(_) => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, TimeResult::Censored(_))
    }

    /// The hit time, or the cap for a censored search.
    pub fn steps(self) -> u64 {
        match self {
            TimeResult::Hit(t) | TimeResult::Censored(t) => t,
        }
    }
}

/// Default censoring cap `ceil(100 / mu(target))`.
pub fn default_cap(model: &MeasureModel, target: &Word) -> Result<u64, EngineError> {
    let lm = positive_measure(model, target)?;
    Ok(scaled_cap(100.0, lm))
}

/// `ceil(c / mu)` from `ln mu`, ignoring rounding noise at exact integers.
pub(crate) fn scaled_cap(c: f64, log_mu: f64) -> u64 {
    let v = (c.ln() - log_mu).exp();
    let r = v.round();
    let v = if (v - r).abs() <= 1e-9 * v { r } else { v.ceil() };
    v.clamp(1.0, u64::MAX as f64) as u64
}

fn positive_measure(model: &MeasureModel, target: &Word) -> Result<f64, EngineError> {
    let lm = model.log_cylinder_measure(target)?;
    if lm.is_zero() {
        return Err(EngineError::ZeroMeasureTarget(target.to_string()));
    }
    Ok(lm.ln())
}

/// First `i` in `1..=cap` with window `i` equal to `target`.
pub fn entrance_time(stream: &mut OrbitStream<'_>, target: &Word, cap: u64) -> Result<TimeResult, EngineError> {
    if cap == 0 {
        return Err(EngineError::ZeroCap);
    }
    positive_measure(stream.model(), target)?;
    let matcher = WordMatcher::new(target);
    Ok(entrance_with(stream, &matcher, cap))
}

/// Entrance search with a prebuilt matcher; no validation.
pub fn entrance_with(stream: &mut OrbitStream<'_>, matcher: &WordMatcher, cap: u64) -> TimeResult {
    let n = matcher.pattern().len() as u64;
    stream.next_symbol(); // x_0 only matters through the kernel
    let mut q = matcher.start();
    // symbol index e closes window i = e - n + 1
    for e in 1..=cap + n - 1 {
        q = matcher.next_state(q, stream.next_symbol());
        if matcher.is_match(q) && e + 1 >= n + 1 {
            return TimeResult::Hit(e + 1 - n);
        }
    }
    TimeResult::Censored(cap)
}

/// Return time of the stream into its own first `n` symbols.
pub fn recurrence_time(stream: &mut OrbitStream<'_>, n: usize, cap: u64) -> Result<TimeResult, EngineError> {
    assert!(n >= 1, "cylinder length must be positive");
    let prefix = Word::new(stream.peek_prefix(n)).expect("n >= 1");
    entrance_time(stream, &prefix, cap)
}

fn check_patterns(patterns: &[Word]) -> Result<usize, EngineError> {
    let first = patterns.first().ok_or(EngineError::EmptyPatternSet)?;
    let n = first.len();
    if patterns.iter().any(|p| p.len() != n) {
        return Err(EngineError::MixedLengths);
    }
    Ok(n)
}

/// `N_{U,M}`: number of `i` in `0..=M` with window `i` in `patterns`.
pub fn hitting_number(stream: &mut OrbitStream<'_>, patterns: &[Word], window: u64) -> Result<u64, EngineError> {
    let n = check_patterns(patterns)? as u64;
    let matcher = MultiMatcher::new(patterns);
    let mut q = matcher.start();
    let mut count = 0;
    for _ in 0..window + n {
        q = matcher.next_state(q, stream.next_symbol());
        count += matcher.is_match(q) as u64;
    }
    Ok(count)
}

/// Entrance time into `target` together with the hitting number of
/// `patterns` over windows `0..=tau` (or `0..=cap` when censored).
pub fn hits_until_entrance(
    stream: &mut OrbitStream<'_>,
    target: &Word,
    patterns: &[Word],
    cap: u64,
) -> Result<(TimeResult, u64), EngineError> {
    if cap == 0 {
        return Err(EngineError::ZeroCap);
    }
    let n = check_patterns(patterns)?;
    if n != target.len() {
        return Err(EngineError::MixedLengths);
    }
    positive_measure(stream.model(), target)?;
    let target_m = WordMatcher::new(target);
    let set_m = MultiMatcher::new(patterns);
    let n = n as u64;
    let (mut qt, mut qs) = (target_m.start(), set_m.start());
    let mut count = 0;
    for e in 0..cap + n {
        let sym = stream.next_symbol();
        qt = target_m.next_state(qt, sym);
        qs = set_m.next_state(qs, sym);
        count += set_m.is_match(qs) as u64;
        if target_m.is_match(qt) && e >= n {
            return Ok((TimeResult::Hit(e + 1 - n), count));
        }
    }
    Ok((TimeResult::Censored(cap), count))
}

/// Result of [`w_sum`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WSum {
    pub time: TimeResult,
    /// `sum_{i=1}^{tau} mu(window i)^s`, accumulated in log space. Partial
    /// when censored.
    pub sum: LogSumExp,
}

impl WSum {
    pub fn ln(&self) -> f64 {
        self.sum.ln()
    }
}

/// Log-measure of a sliding window of length `n`, updated in O(1) per step.
#[derive(Debug, Clone)]
pub(crate) struct SlidingMeasure {
    n: usize,
    /// Last `n + 1` symbols (the previous window plus the new symbol).
    ring: std::collections::VecDeque<Symbol>,
    log_measure: f64,
    since_anchor: u64,
}

impl SlidingMeasure {
    pub(crate) fn new(n: usize) -> Self {
        SlidingMeasure {
            n,
            ring: std::collections::VecDeque::with_capacity(n + 1),
            log_measure: f64::NAN,
            since_anchor: 0,
        }
    }

    /// Push one symbol; returns the log-measure of the window that just
    /// closed, or `None` while fewer than `n` symbols have been seen.
    #[inline]
    pub(crate) fn push(&mut self, model: &MeasureModel, sym: Symbol) -> Option<f64> {
        self.ring.push_back(sym);
        let len = self.ring.len();
        if len < self.n {
            return None;
        }
        if len == self.n {
            self.log_measure = model.log_measure_unchecked(self.ring.make_contiguous());
            return Some(self.log_measure);
        }
        self.since_anchor += 1;
        if self.since_anchor >= REANCHOR_INTERVAL {
            self.ring.pop_front();
            self.log_measure = model.log_measure_unchecked(self.ring.make_contiguous());
            self.since_anchor = 0;
            return Some(self.log_measure);
        }
        // ring = x_{i-1}, x_i, ..., x_{i+n-1}
        let dropped = self.ring[0];
        let second = self.ring[1];
        let old_last = self.ring[len - 2];
        let new_last = self.ring[len - 1];
        self.log_measure += model.log_initial(second) + model.log_step(old_last, new_last)
            - model.log_initial(dropped)
            - model.log_step(dropped, second);
        self.ring.pop_front();
        Some(self.log_measure)
    }

    #[cfg(test)]
    fn current(&self) -> f64 {
        self.log_measure
    }
}

/// `W_n^s(x, z) = sum_{i=1}^{tau} mu(A_n(T^i x))^s` with `tau` the entrance
/// time into `target`.
pub fn w_sum(stream: &mut OrbitStream<'_>, target: &Word, s: f64, cap: u64) -> Result<WSum, EngineError> {
    if cap == 0 {
        return Err(EngineError::ZeroCap);
    }
    if !(s >= 0.0) {
        return Err(EngineError::NegativeS(s));
    }
    positive_measure(stream.model(), target)?;
    let model = stream.model();
    let matcher = WordMatcher::new(target);
    let n = target.len() as u64;
    let mut window = SlidingMeasure::new(target.len());
    let mut q = matcher.start();
    let mut acc = LogSumExp::new();
    for e in 0..cap + n {
        let sym = stream.next_symbol();
        q = matcher.next_state(q, sym);
        if let Some(lm) = window.push(model, sym) {
            if e >= n {
                assert!(lm.is_finite(), "realized window has zero measure");
                acc.push(s * lm);
                if matcher.is_match(q) {
                    return Ok(WSum { time: TimeResult::Hit(e + 1 - n), sum: acc });
                }
            }
        }
    }
    Ok(WSum { time: TimeResult::Censored(cap), sum: acc })
}
