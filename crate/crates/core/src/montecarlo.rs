//! Seeded ensembles over independent `(x, z)` pairs.
//!
//! Sample `j` draws `z` from substream `(seed, j, Target)` and `x` from
//! `(seed, j, Orbit)`, so `z` and `x` are independent draws from `mu` (a
//! sample of `mu x mu`) and the result of sample `j` does not depend on which
//! worker ran it. Work is spread over the current rayon pool.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Matcher, WordMatcher};
use crate::engine::{self, EngineError, TimeResult};
use crate::exact::{exact_survival, Conditioning, ExactError, ProductChain};
use crate::model::{MeasureModel, ModelError};
use crate::orbit::OrbitStream;
use crate::rng::{substream, Role};
use crate::stats::{self, KsResult};
use crate::survival::{steps_for_times, CurveKind, SurvivalCurve};
use crate::word::{Symbol, Word};

/// Censored fraction above which exponent summaries are refused.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;
/// Largest `states * steps` product evaluated exactly by the tail-integrand diagnostic.
pub const EXACT_INNER_BUDGET: u64 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("censored fraction {fraction} exceeds {limit}")]
    ExcessiveCensoring { fraction: f64, limit: f64 },
    #[error("no uncensored samples")]
    EmptySample,
    #[error("epsilon = {0} must be positive")]
    NonPositiveEpsilon(f64),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How the censoring cap is chosen for a target `B`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapPolicy {
    /// `ceil(100 / mu(B))`.
    #[default]
    Default,
    /// `ceil(c / mu(B))`.
    Multiple(f64),
    /// A fixed number of steps.
    Fixed(u64),
}

impl CapPolicy {
    pub fn cap(&self, model: &MeasureModel, target: &Word) -> Result<u64, EngineError> {
        let scaled = |c: f64| -> Result<u64, EngineError> {
            let lm = model.log_cylinder_measure(target)?.ln();
            if lm == f64::NEG_INFINITY {
                return Err(EngineError::ZeroMeasureTarget(target.to_string()));
            }
            Ok(engine::scaled_cap(c, lm))
        };
        match *self {
            CapPolicy::Default => engine::default_cap(model, target),
            CapPolicy::Multiple(c) => scaled(c),
            CapPolicy::Fixed(c) => Ok(c.max(1)),
        }
    }
}

/// One draw of `(1/n) log tau` (or `(1/n) log W`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentSample {
    pub index: u64,
    pub time: TimeResult,
    /// `None` when censored.
    pub exponent: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentSummary {
    pub count: usize,
    pub censored: usize,
    pub censored_fraction: f64,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub target: f64,
}

/// Per-`n` samples of an exponent, with the exact limit they should approach.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentSamples {
    pub n: usize,
    pub target: f64,
    /// Sorted by `index`.
    pub samples: Vec<ExponentSample>,
}

impl ExponentSamples {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.exponent).collect()
    }

    pub fn censored(&self) -> usize {
        self.samples.iter().filter(|s| s.exponent.is_none()).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored() as f64 / self.samples.len().max(1) as f64
    }

    /// Summary of the uncensored values; fails above 1% censoring.
    pub fn summary(&self) -> Result<ExponentSummary, McError> {
        let fraction = self.censored_fraction();
        if fraction > MAX_CENSORED_FRACTION {
            return Err(McError::ExcessiveCensoring { fraction, limit: MAX_CENSORED_FRACTION });
        }
        let mut v = self.values();
        if v.is_empty() {
            return Err(McError::EmptySample);
        }
        v.sort_by(f64::total_cmp);
        let q = |p| stats::quantile_sorted(&v, p);
        Ok(ExponentSummary {
            count: self.samples.len(),
            censored: self.censored(),
            censored_fraction: fraction,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: q(0.5),
            q05: q(0.05),
            q25: q(0.25),
            q75: q(0.75),
            q95: q(0.95),
            target: self.target,
        })
    }

    /// Fractions of uncensored values below `target - eps`, above
    /// `target + eps`, and farther than `eps` on either side.
    pub fn exceedance(&self, eps: f64) -> (f64, f64, f64) {
        let v = self.values();
        let n = v.len().max(1) as f64;
        let below = v.iter().filter(|&&x| x < self.target - eps).count() as f64 / n;
        let above = v.iter().filter(|&&x| x > self.target + eps).count() as f64 / n;
        (below, above, below + above)
    }

    /// Union of samples from disjoint index ranges.
    pub fn merge(mut self, other: ExponentSamples) -> ExponentSamples {
        assert_eq!(self.n, other.n, "cannot merge different cylinder lengths");
        self.samples.extend(other.samples);
        self.samples.sort_by_key(|s| s.index);
        self
    }
}

fn draw_word(model: &MeasureModel, seed: u64, index: u64, n: usize) -> Word {
    let syms: Vec<Symbol> = OrbitStream::new(model, substream(seed, index, Role::Target)).take(n).collect();
    Word::new(syms).expect("n >= 1")
}

fn exponent_of(time: TimeResult, n: usize) -> Option<f64> {
    time.hit().map(|t| (t as f64).ln() / n as f64)
}

fn collect(n: usize, target: f64, samples: Result<Vec<ExponentSample>, McError>) -> Result<ExponentSamples, McError> {
    Ok(ExponentSamples { n, target, samples: samples? })
}

/// `(1/n) log tau_{A_n(z)}(x)` for independent `z`, `x`.
pub fn entrance_exponent_samples(
    model: &MeasureModel,
    n: usize,
    count: u64,
    seed: u64,
    cap: CapPolicy,
) -> Result<ExponentSamples, McError> {
    entrance_exponent_range(model, n, 0..count, seed, cap)
}

/// Samples with indices in `range`; disjoint ranges merge into the full set.
pub fn entrance_exponent_range(
    model: &MeasureModel,
    n: usize,
    range: Range<u64>,
    seed: u64,
    cap: CapPolicy,
) -> Result<ExponentSamples, McError> {
    assert!(n >= 1, "cylinder length must be positive");
    let samples = range
        .into_par_iter()
        .map(|j| {
            let z = draw_word(model, seed, j, n);
            let cap = cap.cap(model, &z)?;
            let mut x = OrbitStream::new(model, substream(seed, j, Role::Orbit));
            let time = engine::entrance_with(&mut x, &WordMatcher::new(&z), cap);
            Ok(ExponentSample { index: j, time, exponent: exponent_of(time, n) })
        })
        .collect();
    collect(n, model.shannon_entropy(), samples)
}

/// `(1/n) log tau_n(x)`: the diagonal `z = x`.
pub fn recurrence_exponent_samples(
    model: &MeasureModel,
    n: usize,
    count: u64,
    seed: u64,
    cap: CapPolicy,
) -> Result<ExponentSamples, McError> {
    assert!(n >= 1, "cylinder length must be positive");
    let samples = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut x = OrbitStream::new(model, substream(seed, j, Role::Orbit));
            let prefix = Word::new(x.peek_prefix(n)).expect("n >= 1");
            let cap = cap.cap(model, &prefix)?;
            let time = engine::entrance_time(&mut x, &prefix, cap)?;
            Ok(ExponentSample { index: j, time, exponent: exponent_of(time, n) })
        })
        .collect();
    collect(n, model.shannon_entropy(), samples)
}

/// Empirical survival of a sampled entrance or return time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalSurvival {
    pub curve: SurvivalCurve,
    pub ks: KsResult,
    pub times: Vec<TimeResult>,
    pub censored: usize,
    /// Mean and standard error of the uncensored times.
    pub mean_time: f64,
    pub mean_stderr: f64,
}

fn empirical(
    model: &MeasureModel,
    target: &Word,
    count: u64,
    t_grid: &[f64],
    seed: u64,
    kind: CurveKind,
) -> Result<EmpiricalSurvival, McError> {
    let lm = model.log_cylinder_measure(target)?.ln();
    if lm == f64::NEG_INFINITY {
        return Err(EngineError::ZeroMeasureTarget(target.to_string()).into());
    }
    let mu = lm.exp();
    let cap = CapPolicy::Default.cap(model, target)?;
    let matcher = WordMatcher::new(target);
    let times: Vec<TimeResult> = (0..count)
        .into_par_iter()
        .map(|j| {
            let rng = substream(seed, j, Role::Orbit);
            let mut x = match kind {
                CurveKind::Entrance => OrbitStream::new(model, rng),
                CurveKind::Return => OrbitStream::with_prefix(model, target.symbols(), rng),
            };
            engine::entrance_with(&mut x, &matcher, cap)
        })
        .collect();
    let mut steps = steps_for_times(t_grid, mu);
    if steps.first() != Some(&0) {
        steps.insert(0, 0);
    }
    let curve = SurvivalCurve::empirical(kind, mu, steps, &times);
    let rescaled: Vec<Option<f64>> = times.iter().map(|t| t.hit().map(|v| v as f64 * mu)).collect();
    let ks = stats::ks_unit_exponential(&rescaled);
    let hits: Vec<f64> = times.iter().filter_map(|t| t.hit()).map(|v| v as f64).collect();
    let (mean_time, mean_stderr) = stats::mean_and_stderr(&hits);
    Ok(EmpiricalSurvival {
        curve,
        ks,
        censored: times.iter().filter(|t| t.is_censored()).count(),
        times,
        mean_time,
        mean_stderr,
    })
}

/// `N` entrance times into `z_word` from stationary `x`, rescaled by
/// `mu(B)`, with the KS distance to `exp(-t)`.
pub fn empirical_survival(
    model: &MeasureModel,
    z_word: &Word,
    count: u64,
    t_grid: &[f64],
    seed: u64,
) -> Result<EmpiricalSurvival, McError> {
    empirical(model, z_word, count, t_grid, seed, CurveKind::Entrance)
}

/// Return times: `x` starts with `z_word` pinned, then follows the kernel,
/// which samples `mu` conditioned on the cylinder exactly.
pub fn empirical_return_survival(
    model: &MeasureModel,
    z_word: &Word,
    count: u64,
    t_grid: &[f64],
    seed: u64,
) -> Result<EmpiricalSurvival, McError> {
    empirical(model, z_word, count, t_grid, seed, CurveKind::Return)
}

/// Estimate of `int F_z^n(e^{n eps}) dmu(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegrandEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub outer_samples: u64,
    /// Whether every inner probability was computed exactly.
    pub exact_inner: bool,
}

/// `F_z^n(e^{n eps}) = P(tau >= e^{n eps} / mu(B))`, exact when the product
/// chain is affordable and estimated from `inner` orbits otherwise.
pub fn entrance_tail_probability(
    model: &MeasureModel,
    target: &Word,
    threshold: f64,
    inner: u64,
    seed: u64,
    index: u64,
) -> Result<(f64, bool), McError> {
    let lm = model.log_cylinder_measure(target)?.ln();
    if lm == f64::NEG_INFINITY {
        return Err(EngineError::ZeroMeasureTarget(target.to_string()).into());
    }
    // P(tau >= m) with m = ceil(threshold / mu) = P(tau > m - 1)
    let m = (threshold.ln() - lm).exp().ceil().max(1.0);
    let steps = m as u64 - 1;
    if steps == 0 {
        return Ok((1.0, true));
    }
    let chain = ProductChain::build(model, target, Conditioning::Entrance)?;
    if (chain.state_count() as u64).saturating_mul(steps) <= EXACT_INNER_BUDGET {
        let curve = exact_survival(&chain, steps);
        return Ok((curve.values[steps as usize], true));
    }
    let matcher = WordMatcher::new(target);
    let survived: u64 = (0..inner.max(1))
        .map(|i| {
            let mut x = OrbitStream::new(model, substream(seed, index.wrapping_mul(1 << 20) + i, Role::Aux));
            engine::entrance_with(&mut x, &matcher, steps).is_censored() as u64
        })
        .sum();
    Ok((survived as f64 / inner.max(1) as f64, false))
}

/// Outer Monte Carlo over `z` with exact (or sampled) inner survival. The
/// `z` of outer sample `j` is the length-`n` prefix of one fixed stream, so
/// estimates for different `n` share their random numbers.
pub fn theorem2_integrand(
    model: &MeasureModel,
    n: usize,
    epsilon: f64,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<IntegrandEstimate, McError> {
    if !(epsilon > 0.0) {
        return Err(McError::NonPositiveEpsilon(epsilon));
    }
    let threshold = (n as f64 * epsilon).exp();
    let values: Vec<(f64, bool)> = (0..outer)
        .into_par_iter()
        .map(|j| {
            let z = draw_word(model, seed, j, n);
            entrance_tail_probability(model, &z, threshold, inner, seed, j)
        })
        .collect::<Result<_, _>>()?;
    let probs: Vec<f64> = values.iter().map(|v| v.0).collect();
    let (estimate, stderr) = stats::mean_and_stderr(&probs);
    Ok(IntegrandEstimate {
        n,
        epsilon,
        estimate,
        stderr,
        outer_samples: outer,
        exact_inner: values.iter().all(|v| v.1),
    })
}

/// Limit constant `h - s R(s)` of `(1/n) log W_n^s`.
pub fn wns_target(model: &MeasureModel, s: f64) -> Result<f64, ModelError> {
    let h = model.shannon_entropy();
    if s == 0.0 {
        Ok(h)
    } else {
        Ok(h - s * model.renyi_entropy(s)?)
    }
}

fn wns_sample(model: &MeasureModel, x: &mut OrbitStream<'_>, z: &Word, s: f64, n: usize, cap: CapPolicy, j: u64) -> Result<ExponentSample, McError> {
    let cap = cap.cap(model, z)?;
    let w = engine::w_sum(x, z, s, cap)?;
    let exponent = (!w.time.is_censored()).then(|| w.ln() / n as f64);
    Ok(ExponentSample { index: j, time: w.time, exponent })
}

/// `(1/n) log W_n^s(x, z)` for independent `x`, `z`.
pub fn wns_exponent_samples(
    model: &MeasureModel,
    n: usize,
    s: f64,
    count: u64,
    seed: u64,
    cap: CapPolicy,
) -> Result<ExponentSamples, McError> {
    assert!(n >= 1, "cylinder length must be positive");
    let target = wns_target(model, s)?;
    let samples = (0..count)
        .into_par_iter()
        .map(|j| {
            let z = draw_word(model, seed, j, n);
            let mut x = OrbitStream::new(model, substream(seed, j, Role::Orbit));
            wns_sample(model, &mut x, &z, s, n, cap, j)
        })
        .collect();
    collect(n, target, samples)
}

/// `(1/n) log W_n^s(x, x)`; at `s = 0` this is the recurrence exponent.
pub fn wns_diagonal_exponent_samples(
    model: &MeasureModel,
    n: usize,
    s: f64,
    count: u64,
    seed: u64,
    cap: CapPolicy,
) -> Result<ExponentSamples, McError> {
    assert!(n >= 1, "cylinder length must be positive");
    let target = wns_target(model, s)?;
    let samples = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut x = OrbitStream::new(model, substream(seed, j, Role::Orbit));
            let z = Word::new(x.peek_prefix(n)).expect("n >= 1");
            wns_sample(model, &mut x, &z, s, n, cap, j)
        })
        .collect();
    collect(n, target, samples)
}

/// Matcher depth check used by callers that reuse a matcher across samples.
pub fn matcher_fits(matcher: &WordMatcher, n: usize) -> bool {
    matcher.state_count() == n + 1
}
