//! Stationary shift-invariant measures and their closed-form quantities.
//!
//! Three families are supported:
//!
//! * [`Bernoulli`]: i.i.d. symbols with strictly positive weights,
//! * [`Markov`]: an irreducible aperiodic chain started from its stationary law,
//! * [`GeometricBernoulli`]: i.i.d. symbols on a countable alphabet with
//!   `p_i = (1 - theta) * theta^i` (0-based), the countable-partition witness
//!   for an exponentially decaying tail.
//!
//! All probabilities are carried in natural-log space and entropies are in nats.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logspace::{log_sum_exp, LogMeasure};
use crate::word::{Symbol, Word};

const SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 1_000_000;
/// Residual mass left out of the geometric sampler.
const GEOMETRIC_RESIDUAL: f64 = 1e-15;
/// Default refusal threshold for cylinder enumeration (`k^n`).
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("row {row} sums to {sum}, not 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("probability {value} at index {index} is negative or not finite")]
    InvalidProbability { index: usize, value: f64 },
    #[error("symbol {symbol} has zero mass; remove it from the alphabet")]
    ZeroMassSymbol { symbol: usize },
    #[error("transition matrix is reducible")]
    ReducibleChain,
    #[error("transition matrix is periodic with period {period}")]
    PeriodicChain { period: usize },
    #[error("supplied initial distribution is not stationary (residual {residual:e})")]
    NonStationaryPi { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("theta = {0} is outside (0, 1)")]
    BadThetaRange(f64),
    #[error("symbol {symbol} is not in the alphabet of size {alphabet}")]
    InvalidSymbol { symbol: u32, alphabet: usize },
    #[error("s = {0} must be positive")]
    NonPositiveS(f64),
    #[error("power iteration did not converge in {iterations} iterations")]
    PowerIterationNoConvergence { iterations: usize },
    #[error("enumerating {words} words exceeds the budget of {budget}")]
    BudgetExceeded { words: f64, budget: u64 },
    #[error("Dobrushin coefficient is 1; the geometric phi bound is vacuous")]
    ContractionDegenerate,
    #[error("model specification: {0}")]
    Spec(String),
}

/// I.i.d. symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Bernoulli {
    p: Vec<f64>,
    log_p: Vec<f64>,
    cdf: Vec<f64>,
}

/// Stationary Markov chain on `k` states.
#[derive(Clone, Debug, PartialEq)]
pub struct Markov {
    pi: Vec<f64>,
    p: Vec<Vec<f64>>,
    log_pi: Vec<f64>,
    log_p: Vec<Vec<f64>>,
    pi_cdf: Vec<f64>,
    row_cdf: Vec<Vec<f64>>,
}

/// I.i.d. geometric symbols on a countable alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricBernoulli {
    theta: f64,
    truncation: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureModel {
    Bernoulli(Bernoulli),
    Markov(Markov),
    Geometric(GeometricBernoulli),
}

/// Bound on the phi-mixing coefficient at a given gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiBound {
    /// Contraction factor per step (0 for independent models).
    pub rho: f64,
    /// Multiplicative constant.
    pub constant: f64,
    /// `constant * rho^gap`.
    pub value: f64,
}

/// Status of the exponential-tail condition on the partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailDecay {
    /// Finite partitions satisfy the condition with no work.
    TriviallySatisfied,
    /// Tail mass of partition elements `j, j+1, ...` (1-based) equals `delta^(j-1)`.
    Geometric { delta: f64 },
}

impl TailDecay {
    /// Exact mass of partition elements with 1-based index `>= j`.
    pub fn tail_mass(&self, j: u32, alphabet: usize) -> f64 {
        match *self {
            TailDecay::TriviallySatisfied => {
                if (j as usize) <= 1 {
                    1.0
                } else if j as usize > alphabet {
                    0.0
                } else {
                    f64::NAN
                }
            }
            TailDecay::Geometric { delta } => delta.powi(j.max(1) as i32 - 1),
        }
    }
}

/// Law of the next symbol.
#[derive(Clone, Debug, PartialEq)]
pub enum NextSymbolLaw {
    Finite(Vec<f64>),
    Geometric { theta: f64 },
}

impl NextSymbolLaw {
    pub fn prob(&self, symbol: Symbol) -> f64 {
        match self {
            NextSymbolLaw::Finite(p) => p.get(symbol.index()).copied().unwrap_or(0.0),
            NextSymbolLaw::Geometric { theta } => (1.0 - theta) * theta.powi(symbol.0 as i32),
        }
    }
}

fn check_distribution(p: &[f64], row: usize) -> Result<(), ModelError> {
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidProbability { index: i, value: v });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(ModelError::NonStochasticRow { row, sum });
    }
    Ok(())
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

#[inline]
fn draw(cdf: &[f64], u: f64) -> u32 {
    if cdf.len() <= 8 {
        cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u32
    } else {
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u32
    }
}

fn ln_vec(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.ln()).collect()
}

/// Strong connectivity and period of the directed graph of positive entries.
fn period_of(p: &[Vec<f64>]) -> Option<usize> {
    let k = p.len();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..k {
                let w = if forward { p[u][v] } else { p[v][u] };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    if !reach(true).iter().all(|&b| b) || !reach(false).iter().all(|&b| b) {
        return None;
    }
    // BFS levels; the period is the gcd of level[u] + 1 - level[v] over edges.
    let mut level = vec![usize::MAX; k];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..k {
            if p[u][v] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let mut g = 0;
    for u in 0..k {
        for v in 0..k {
            if p[u][v] > 0.0 {
                let d = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, d);
            }
        }
    }
    Some(g)
}

/// Stop rule for a linearly converging iteration: the remaining error is
/// about `delta * r / (1 - r)` with `r` the observed contraction ratio. Once
/// the steps stop shrinking below the tolerance, rounding has taken over.
fn converged_geometrically(delta: f64, last_delta: f64) -> bool {
    if delta == 0.0 {
        return true;
    }
    if delta >= POWER_TOL {
        return false;
    }
    let r = delta / last_delta;
    r >= 1.0 || delta * r / (1.0 - r) < 1e-15
}

/// Stationary vector by damped power iteration on `(P + I) / 2`.
fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    let k = p.len();
    let mut v = vec![1.0 / k as f64; k];
    let mut last_delta = f64::INFINITY;
    for _ in 0..POWER_CAP {
        let mut next = vec![0.0; k];
        for i in 0..k {
            let vi = v[i] * 0.5;
            next[i] += vi;
            for j in 0..k {
                next[j] += vi * p[i][j];
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if converged_geometrically(delta, last_delta) {
            return Ok(v);
        }
        last_delta = delta;
    }
    Err(ModelError::PowerIterationNoConvergence { iterations: POWER_CAP })
}

fn stationarity_residual(pi: &[f64], p: &[Vec<f64>]) -> f64 {
    let k = pi.len();
    (0..k)
        .map(|j| {
            let flow: f64 = (0..k).map(|i| pi[i] * p[i][j]).sum();
            (flow - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Leading eigenvalue of a non-negative irreducible matrix by power iteration.
fn perron_root(q: &[Vec<f64>], cap: usize) -> Result<f64, ModelError> {
    let k = q.len();
    let mut v = vec![1.0 / k as f64; k];
    let mut lambda = 0.0;
    let mut last_delta = f64::INFINITY;
    for _ in 0..cap {
        let mut next = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                next[i] += q[i][j] * v[j];
            }
        }
        let norm: f64 = next.iter().sum();
        let new_lambda = norm / v.iter().sum::<f64>();
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum::<f64>()
            + (new_lambda - lambda).abs() / new_lambda.abs();
        lambda = new_lambda;
        v = next;
        if converged_geometrically(delta, last_delta) {
            return Ok(lambda);
        }
        last_delta = delta;
    }
    Err(ModelError::PowerIterationNoConvergence { iterations: cap })
}

impl Bernoulli {
    pub fn new(p: Vec<f64>) -> Result<Self, ModelError> {
        if p.is_empty() {
            return Err(ModelError::EmptyAlphabet);
        }
        check_distribution(&p, 0)?;
        if let Some(i) = p.iter().position(|&v| v == 0.0) {
            return Err(ModelError::ZeroMassSymbol { symbol: i });
        }
        Ok(Bernoulli { log_p: ln_vec(&p), cdf: cumulative(&p), p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

impl Markov {
    /// Validated chain. `pi` is checked for stationarity when supplied and
    /// computed otherwise.
    pub fn new(p: Vec<Vec<f64>>, pi: Option<Vec<f64>>) -> Result<Self, ModelError> {
        let k = p.len();
        if k == 0 {
            return Err(ModelError::EmptyAlphabet);
        }
        for (r, row) in p.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::DimensionMismatch(format!(
                    "row {r} has {} entries, expected {k}",
                    row.len()
                )));
            }
            check_distribution(row, r)?;
        }
        match period_of(&p) {
            None => return Err(ModelError::ReducibleChain),
            Some(1) => {}
            Some(period) => return Err(ModelError::PeriodicChain { period }),
        }
        let pi = match pi {
            Some(pi) => {
                if pi.len() != k {
                    return Err(ModelError::DimensionMismatch(format!(
                        "pi has {} entries, expected {k}",
                        pi.len()
                    )));
                }
                check_distribution(&pi, usize::MAX)?;
                let residual = stationarity_residual(&pi, &p);
                if residual > STATIONARY_TOL {
                    return Err(ModelError::NonStationaryPi { residual });
                }
                pi
            }
            None => {
                let pi = stationary_vector(&p)?;
                let residual = stationarity_residual(&pi, &p);
                if residual > STATIONARY_TOL {
                    return Err(ModelError::NonStationaryPi { residual });
                }
                pi
            }
        };
        Ok(Self::assemble(p, pi))
    }

    /// No validation at all. Only meant for exercising the sampling engine on
    /// chains the validator refuses (periodic, non-stationary start).
    pub fn new_unchecked(p: Vec<Vec<f64>>, initial: Vec<f64>) -> Self {
        Self::assemble(p, initial)
    }

    fn assemble(p: Vec<Vec<f64>>, pi: Vec<f64>) -> Self {
        Markov {
            log_pi: ln_vec(&pi),
            log_p: p.iter().map(|r| ln_vec(r)).collect(),
            pi_cdf: cumulative(&pi),
            row_cdf: p.iter().map(|r| cumulative(r)).collect(),
            pi,
            p,
        }
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// `1 - sum_j min_i P_ij`.
    pub fn contraction_coefficient(&self) -> f64 {
        let k = self.p.len();
        let overlap: f64 = (0..k)
            .map(|j| (0..k).map(|i| self.p[i][j]).fold(f64::INFINITY, f64::min))
            .sum();
        (1.0 - overlap).max(0.0)
    }
}

impl GeometricBernoulli {
    pub fn new(theta: f64) -> Result<Self, ModelError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(ModelError::BadThetaRange(theta));
        }
        // smallest L with theta^L < residual
        let truncation = (GEOMETRIC_RESIDUAL.ln() / theta.ln()).floor() as u32 + 1;
        Ok(GeometricBernoulli { theta, truncation })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of symbols the sampler can emit.
    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    #[inline]
    pub fn prob(&self, symbol: Symbol) -> f64 {
        (1.0 - self.theta) * self.theta.powi(symbol.0 as i32)
    }

    #[inline]
    pub fn log_prob(&self, symbol: Symbol) -> f64 {
        (1.0 - self.theta).ln() + symbol.0 as f64 * self.theta.ln()
    }

    /// `sum_i p_i^a`, in closed form.
    pub fn power_sum(&self, a: f64) -> f64 {
        (1.0 - self.theta).powf(a) / (1.0 - self.theta.powf(a))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        // P(X >= j) = theta^j, so X = floor(ln(1 - u) / ln theta).
        let x = ((1.0 - u).ln() / self.theta.ln()).floor();
        (x as u32).min(self.truncation - 1)
    }
}

impl MeasureModel {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self, ModelError> {
        Ok(MeasureModel::Bernoulli(Bernoulli::new(p)?))
    }

    pub fn markov(p: Vec<Vec<f64>>, pi: Option<Vec<f64>>) -> Result<Self, ModelError> {
        Ok(MeasureModel::Markov(Markov::new(p, pi)?))
    }

    pub fn geometric(theta: f64) -> Result<Self, ModelError> {
        Ok(MeasureModel::Geometric(GeometricBernoulli::new(theta)?))
    }

    /// Uniform Bernoulli on `k` symbols.
    pub fn uniform(k: usize) -> Result<Self, ModelError> {
        Self::bernoulli(vec![1.0 / k as f64; k])
    }

    /// Fair coin.
    pub fn fair_coin() -> Self {
        Self::uniform(2).expect("valid")
    }

    /// The finite built-in models: fair coin, the (0.7, 0.3) coin and the
    /// two-state chain `[[0.9, 0.1], [0.2, 0.8]]`.
    pub fn builtins() -> Vec<(&'static str, MeasureModel)> {
        vec![
            ("fair-coin", Self::fair_coin()),
            ("biased-coin", Self::bernoulli(vec![0.7, 0.3]).expect("valid")),
            (
                "two-state-markov",
                Self::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).expect("valid"),
            ),
        ]
    }

    /// Re-check every invariant of an already constructed model.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            MeasureModel::Bernoulli(b) => Bernoulli::new(b.p.clone()).map(|_| ()),
            MeasureModel::Markov(m) => Markov::new(m.p.clone(), Some(m.pi.clone())).map(|_| ()),
            MeasureModel::Geometric(g) => GeometricBernoulli::new(g.theta).map(|_| ()),
        }
    }

    /// `None` for the countable alphabet.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            MeasureModel::Bernoulli(b) => Some(b.p.len()),
            MeasureModel::Markov(m) => Some(m.p.len()),
            MeasureModel::Geometric(_) => None,
        }
    }

    pub fn check_symbol(&self, symbol: Symbol) -> Result<(), ModelError> {
        match self.alphabet_size() {
            Some(k) if symbol.index() >= k => {
                Err(ModelError::InvalidSymbol { symbol: symbol.0, alphabet: k })
            }
            _ => Ok(()),
        }
    }

    /// Log of the stationary one-symbol probability.
    #[inline]
    pub fn log_initial(&self, symbol: Symbol) -> f64 {
        match self {
            MeasureModel::Bernoulli(b) => b.log_p[symbol.index()],
            MeasureModel::Markov(m) => m.log_pi[symbol.index()],
            MeasureModel::Geometric(g) => g.log_prob(symbol),
        }
    }

    /// Log of the conditional probability of `next` after `prev`.
    #[inline]
    pub fn log_step(&self, prev: Symbol, next: Symbol) -> f64 {
        match self {
            MeasureModel::Bernoulli(b) => b.log_p[next.index()],
            MeasureModel::Markov(m) => m.log_p[prev.index()][next.index()],
            MeasureModel::Geometric(g) => g.log_prob(next),
        }
    }

    #[inline]
    pub(crate) fn log_measure_unchecked(&self, symbols: &[Symbol]) -> f64 {
        let mut acc = self.log_initial(symbols[0]);
        for pair in symbols.windows(2) {
            acc += self.log_step(pair[0], pair[1]);
        }
        acc
    }

    /// Exact log-measure of the cylinder named by `word`.
    pub fn log_cylinder_measure(&self, word: &Word) -> Result<LogMeasure, ModelError> {
        for &s in word.symbols() {
            self.check_symbol(s)?;
        }
        Ok(LogMeasure(self.log_measure_unchecked(word.symbols())))
    }

    /// Metric entropy in nats.
    pub fn shannon_entropy(&self) -> f64 {
        let h = |p: &[f64]| -> f64 {
            p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
        };
        match self {
            MeasureModel::Bernoulli(b) => h(&b.p),
            MeasureModel::Markov(m) => m.pi.iter().zip(&m.p).map(|(pi, row)| pi * h(row)).sum(),
            MeasureModel::Geometric(g) => {
                let t = g.theta;
                -(1.0 - t).ln() - t / (1.0 - t) * t.ln()
            }
        }
    }

    /// Renyi entropy function `R(s)` in nats.
    pub fn renyi_entropy(&self, s: f64) -> Result<f64, ModelError> {
        self.renyi_entropy_with_cap(s, POWER_CAP)
    }

    pub fn renyi_entropy_with_cap(&self, s: f64, iteration_cap: usize) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::NonPositiveS(s));
        }
        let a = 1.0 + s;
        match self {
            MeasureModel::Bernoulli(b) => {
                let terms: Vec<f64> = b.log_p.iter().map(|lp| a * lp).collect();
                Ok(-log_sum_exp(&terms) / s)
            }
            MeasureModel::Markov(m) => {
                let q: Vec<Vec<f64>> =
                    m.p.iter().map(|r| r.iter().map(|v| v.powf(a)).collect()).collect();
                let lambda = perron_root(&q, iteration_cap)?;
                Ok(-lambda.ln() / s)
            }
            MeasureModel::Geometric(g) => Ok(-g.power_sum(a).ln() / s),
        }
    }

    /// `log Z_n(s) = log sum over n-cylinders of mu(A)^(1+s)`.
    ///
    /// Bernoulli models enumerate all `k^n` cylinders (refused beyond
    /// [`DEFAULT_ENUMERATION_BUDGET`]); Markov models use the transfer matrix
    /// with entries `P_ij^(1+s)` in log space. The geometric model uses the
    /// product form `n * log sum p_i^(1+s)`.
    pub fn partition_sum_exact(&self, n: usize, s: f64) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::NonPositiveS(s));
        }
        assert!(n >= 1, "cylinder length must be positive");
        let a = 1.0 + s;
        match self {
            MeasureModel::Bernoulli(_) => {
                self.partition_sum_by_enumeration(n, s, DEFAULT_ENUMERATION_BUDGET)
            }
            MeasureModel::Markov(m) => {
                let k = m.p.len();
                let mut v: Vec<f64> = m.log_pi.iter().map(|lp| a * lp).collect();
                for _ in 1..n {
                    v = (0..k)
                        .map(|j| {
                            let terms: Vec<f64> =
                                (0..k).map(|i| v[i] + a * m.log_p[i][j]).collect();
                            log_sum_exp(&terms)
                        })
                        .collect();
                }
                Ok(log_sum_exp(&v))
            }
            MeasureModel::Geometric(g) => Ok(n as f64 * g.power_sum(a).ln()),
        }
    }

    /// `log Z_n(s)` by walking every positive-measure `n`-cylinder.
    pub fn partition_sum_by_enumeration(&self, n: usize, s: f64, budget: u64) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::NonPositiveS(s));
        }
        let k = self.alphabet_size().ok_or(ModelError::BudgetExceeded {
            words: f64::INFINITY,
            budget,
        })?;
        let words = (k as f64).powi(n as i32);
        if words > budget as f64 {
            return Err(ModelError::BudgetExceeded { words, budget });
        }
        let a = 1.0 + s;
        let mut acc = crate::logspace::LogSumExp::new();
        // depth-first over prefixes, carrying the prefix log-measure
        let mut stack: Vec<(Symbol, usize, f64)> =
            (0..k as u32).map(|c| (Symbol(c), 1, self.log_initial(Symbol(c)))).collect();
        while let Some((last, depth, lm)) = stack.pop() {
            if lm == f64::NEG_INFINITY {
                continue;
            }
            if depth == n {
                acc.push(a * lm);
                continue;
            }
            for c in 0..k as u32 {
                let next = Symbol(c);
                stack.push((next, depth + 1, lm + self.log_step(last, next)));
            }
        }
        Ok(acc.ln())
    }

    /// Bound on the phi-mixing coefficient at `gap`.
    ///
    /// Independent models return 0. For a Markov chain the bound is
    /// `max_j (1 / pi_j) * rho^gap` with `rho` the Dobrushin-type coefficient
    /// `1 - sum_j min_i P_ij`; `rho < 1` makes the bound geometric, hence
    /// summable.
    pub fn phi_bound(&self, gap: u32) -> Result<PhiBound, ModelError> {
        match self {
            MeasureModel::Bernoulli(_) | MeasureModel::Geometric(_) => {
                Ok(PhiBound { rho: 0.0, constant: 0.0, value: 0.0 })
            }
            MeasureModel::Markov(m) => {
                let rho = m.contraction_coefficient();
                if rho >= 1.0 {
                    return Err(ModelError::ContractionDegenerate);
                }
                let constant = m.pi.iter().map(|p| 1.0 / p).fold(0.0, f64::max);
                let value = if gap == 0 { constant } else { constant * rho.powi(gap as i32) };
                Ok(PhiBound { rho, constant, value })
            }
        }
    }

    pub fn tail_decay(&self) -> TailDecay {
        match self {
            MeasureModel::Geometric(g) => TailDecay::Geometric { delta: g.theta },
            _ => TailDecay::TriviallySatisfied,
        }
    }

    pub fn next_symbol_distribution(&self, prev: Option<Symbol>) -> Result<NextSymbolLaw, ModelError> {
        if let Some(p) = prev {
            self.check_symbol(p)?;
        }
        Ok(match (self, prev) {
            (MeasureModel::Bernoulli(b), _) => NextSymbolLaw::Finite(b.p.clone()),
            (MeasureModel::Markov(m), None) => NextSymbolLaw::Finite(m.pi.clone()),
            (MeasureModel::Markov(m), Some(p)) => NextSymbolLaw::Finite(m.p[p.index()].clone()),
            (MeasureModel::Geometric(g), _) => NextSymbolLaw::Geometric { theta: g.theta },
        })
    }

    /// Stationary one-symbol law (finite alphabets only).
    pub fn stationary(&self) -> Option<Vec<f64>> {
        match self {
            MeasureModel::Bernoulli(b) => Some(b.p.clone()),
            MeasureModel::Markov(m) => Some(m.pi.clone()),
            MeasureModel::Geometric(_) => None,
        }
    }

    /// Whether the next-symbol law depends on the previous symbol.
    pub fn has_memory(&self) -> bool {
        matches!(self, MeasureModel::Markov(_))
    }

    #[inline]
    pub(crate) fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        match self {
            MeasureModel::Bernoulli(b) => Symbol(draw(&b.cdf, rng.random())),
            MeasureModel::Markov(m) => Symbol(draw(&m.pi_cdf, rng.random())),
            MeasureModel::Geometric(g) => Symbol(g.sample(rng)),
        }
    }

    #[inline]
    pub(crate) fn sample_next<R: Rng + ?Sized>(&self, prev: Symbol, rng: &mut R) -> Symbol {
        match self {
            MeasureModel::Bernoulli(b) => Symbol(draw(&b.cdf, rng.random())),
            MeasureModel::Markov(m) => Symbol(draw(&m.row_cdf[prev.index()], rng.random())),
            MeasureModel::Geometric(g) => Symbol(g.sample(rng)),
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        match self {
            MeasureModel::Bernoulli(b) => ModelSpec {
                kind: ModelKind::Bernoulli,
                p: Some(b.p.clone()),
                transition: None,
                pi: None,
                theta: None,
            },
            MeasureModel::Markov(m) => ModelSpec {
                kind: ModelKind::Markov,
                p: None,
                transition: Some(m.p.clone()),
                pi: Some(m.pi.clone()),
                theta: None,
            },
            MeasureModel::Geometric(g) => ModelSpec {
                kind: ModelKind::Geometric,
                p: None,
                transition: None,
                pi: None,
                theta: Some(g.theta),
            },
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        let missing = |field: &str| ModelError::Spec(format!("{:?} model requires {field:?}", spec.kind));
        match spec.kind {
            ModelKind::Bernoulli => Self::bernoulli(spec.p.clone().ok_or_else(|| missing("p"))?),
            ModelKind::Markov => Self::markov(
                spec.transition.clone().ok_or_else(|| missing("P"))?,
                spec.pi.clone(),
            ),
            ModelKind::Geometric => Self::geometric(spec.theta.ok_or_else(|| missing("theta"))?),
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec =
            serde_json::from_str(json).map_err(|e| ModelError::Spec(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Spec(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bernoulli,
    Markov,
    Geometric,
}

/// JSON model file:
/// `{"kind": "bernoulli"|"markov"|"geometric", "p": [...], "P": [[...]], "pi": [...], "theta": x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> MeasureModel {
        MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn validate_examples() {
        assert!(MeasureModel::bernoulli(vec![0.5, 0.5]).is_ok());
        let m = two_state();
        let pi = m.stationary().unwrap();
        close(pi[0], 2.0 / 3.0, 1e-12);
        close(pi[1], 1.0 / 3.0, 1e-12);
        assert_eq!(
            MeasureModel::markov(vec![vec![1.0, 0.0], vec![0.0, 1.0]], None),
            Err(ModelError::ReducibleChain)
        );
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            MeasureModel::bernoulli(vec![0.5, 0.4]),
            Err(ModelError::NonStochasticRow { .. })
        ));
        assert_eq!(
            MeasureModel::bernoulli(vec![1.0, 0.0]),
            Err(ModelError::ZeroMassSymbol { symbol: 1 })
        );
        assert_eq!(MeasureModel::geometric(1.0), Err(ModelError::BadThetaRange(1.0)));
        assert_eq!(MeasureModel::geometric(0.0), Err(ModelError::BadThetaRange(0.0)));
        assert!(matches!(
            MeasureModel::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None),
            Err(ModelError::PeriodicChain { period: 2 })
        ));
        assert!(matches!(
            MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], Some(vec![0.5, 0.5])),
            Err(ModelError::NonStationaryPi { .. })
        ));
        assert!(matches!(
            MeasureModel::markov(vec![vec![0.9, 0.1]], None),
            Err(ModelError::DimensionMismatch(_))
        ));
        // supplied stationary pi is accepted
        assert!(MeasureModel::markov(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            Some(vec![2.0 / 3.0, 1.0 / 3.0])
        )
        .is_ok());
        assert!(two_state().validate().is_ok());
    }

    #[test]
    fn zero_transitions_allowed_when_irreducible_and_aperiodic() {
        let m = MeasureModel::markov(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
            None,
        )
        .unwrap();
        let pi = m.stationary().unwrap();
        for v in pi {
            close(v, 1.0 / 3.0, 1e-11);
        }
    }

    #[test]
    fn cylinder_measures() {
        let coin = MeasureModel::fair_coin();
        let w: Word = "0110".parse().unwrap();
        close(coin.log_cylinder_measure(&w).unwrap().ln(), (1.0f64 / 16.0).ln(), 1e-14);
        let w: Word = "01".parse().unwrap();
        close(two_state().log_cylinder_measure(&w).unwrap().ln(), (1.0f64 / 15.0).ln(), 1e-12);
        let forbidden = MeasureModel::markov(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
            None,
        )
        .unwrap();
        let w: Word = "02".parse().unwrap();
        assert!(forbidden.log_cylinder_measure(&w).unwrap().is_zero());
        let w: Word = "2".parse().unwrap();
        assert!(matches!(coin.log_cylinder_measure(&w), Err(ModelError::InvalidSymbol { .. })));
    }

    #[test]
    fn entropy_examples() {
        close(MeasureModel::fair_coin().shannon_entropy(), 2f64.ln(), 1e-15);
        let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
        let hand = -0.7 * 0.7f64.ln() - 0.3 * 0.3f64.ln();
        close(biased.shannon_entropy(), hand, 1e-15);
        close(biased.shannon_entropy(), 0.6109, 5e-5);
        let h = |p: f64| -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        let hand = 2.0 / 3.0 * h(0.9) + 1.0 / 3.0 * h(0.2);
        close(two_state().shannon_entropy(), hand, 1e-12);
        close(two_state().shannon_entropy(), 0.3835, 5e-5);
    }

    #[test]
    fn geometric_entropy_matches_series() {
        let theta: f64 = 0.6;
        let g = MeasureModel::geometric(theta).unwrap();
        let series: f64 = (0..400)
            .map(|i| {
                let p = (1.0 - theta) * theta.powi(i);
                -p * p.ln()
            })
            .sum();
        close(g.shannon_entropy(), series, 1e-12);
        let power_series: f64 = (0..400).map(|i| ((1.0 - theta) * theta.powi(i)).powf(2.5)).sum();
        if let MeasureModel::Geometric(inner) = &g {
            close(inner.power_sum(2.5), power_series, 1e-14);
            assert!(theta.powi(inner.truncation() as i32) < 1e-15);
            assert!(theta.powi(inner.truncation() as i32 - 1) >= 1e-15);
        }
    }

    #[test]
    fn renyi_examples() {
        for k in [2usize, 3, 5] {
            let u = MeasureModel::uniform(k).unwrap();
            for s in [0.1, 0.5, 1.0, 2.0, 7.5] {
                close(u.renyi_entropy(s).unwrap(), (k as f64).ln(), 1e-12);
            }
        }
        let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
        close(biased.renyi_entropy(1.0).unwrap(), -(0.58f64).ln(), 1e-14);
        // leading root of [[0.81, 0.01], [0.04, 0.64]] by the quadratic formula
        let (tr, det) = (0.81f64 + 0.64, 0.81f64 * 0.64 - 0.01 * 0.04);
        let lambda = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        close(two_state().renyi_entropy(1.0).unwrap(), -lambda.ln(), 1e-11);
        close(two_state().renyi_entropy(1.0).unwrap(), 0.2079, 5e-5);
        assert_eq!(two_state().renyi_entropy(0.0), Err(ModelError::NonPositiveS(0.0)));
        assert!(matches!(
            two_state().renyi_entropy_with_cap(1.0, 2),
            Err(ModelError::PowerIterationNoConvergence { .. })
        ));
    }

    #[test]
    fn renyi_near_zero_approaches_shannon() {
        let mut models: Vec<MeasureModel> =
            MeasureModel::builtins().into_iter().map(|(_, m)| m).collect();
        models.push(MeasureModel::geometric(0.5).unwrap());
        for m in models {
            let gap = (m.renyi_entropy(0.001).unwrap() - m.shannon_entropy()).abs();
            assert!(gap <= 0.01, "{m:?}: gap {gap}");
        }
    }

    #[test]
    fn partition_sum_examples() {
        let coin = MeasureModel::fair_coin();
        close(coin.partition_sum_exact(3, 1.0).unwrap(), (1.0f64 / 8.0).ln(), 1e-13);
        let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
        close(biased.partition_sum_exact(2, 1.0).unwrap(), (0.58f64 * 0.58).ln(), 1e-13);
        let m = two_state();
        let pi = [2.0 / 3.0, 1.0 / 3.0];
        let p = [[0.9, 0.1], [0.2, 0.8]];
        let mut hand = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mu: f64 = pi[i] * p[i][j];
                hand += mu * mu;
            }
        }
        close(m.partition_sum_exact(2, 1.0).unwrap(), f64::ln(hand), 1e-12);
    }

    #[test]
    fn partition_sum_budget() {
        let u = MeasureModel::uniform(10).unwrap();
        assert!(matches!(
            u.partition_sum_exact(9, 1.0),
            Err(ModelError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            MeasureModel::geometric(0.5).unwrap().partition_sum_by_enumeration(2, 1.0, 1000),
            Err(ModelError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn markov_transfer_matches_enumeration() {
        let m = MeasureModel::markov(
            vec![vec![0.5, 0.5, 0.0], vec![0.1, 0.6, 0.3], vec![0.4, 0.0, 0.6]],
            None,
        )
        .unwrap();
        for n in 1..=8 {
            for s in [0.5, 1.0, 3.0] {
                let a = m.partition_sum_exact(n, s).unwrap();
                let b = m.partition_sum_by_enumeration(n, s, 1 << 20).unwrap();
                close(a, b, 1e-12);
            }
        }
    }

    #[test]
    fn phi_bound_examples() {
        let coin = MeasureModel::bernoulli(vec![0.2, 0.8]).unwrap();
        assert_eq!(coin.phi_bound(5).unwrap().value, 0.0);
        let b = two_state().phi_bound(3).unwrap();
        close(b.rho, 0.7, 1e-15);
        close(b.constant, 3.0, 1e-10);
        close(b.value, 3.0 * 0.343, 1e-9);
        let uniform_rows =
            MeasureModel::markov(vec![vec![0.3, 0.7], vec![0.3, 0.7]], None).unwrap();
        let b = uniform_rows.phi_bound(1).unwrap();
        assert!(b.rho.abs() < 1e-15);
        assert!(b.value.abs() < 1e-15);
        let degenerate = MeasureModel::markov(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
            None,
        )
        .unwrap();
        assert_eq!(degenerate.phi_bound(1), Err(ModelError::ContractionDegenerate));
    }

    #[test]
    fn tail_decay_examples() {
        assert_eq!(MeasureModel::fair_coin().tail_decay(), TailDecay::TriviallySatisfied);
        let g = MeasureModel::geometric(0.5).unwrap().tail_decay();
        assert_eq!(g, TailDecay::Geometric { delta: 0.5 });
        close(g.tail_mass(4, 0), 0.125, 1e-15);
        let g = MeasureModel::geometric(0.9).unwrap().tail_decay();
        close(g.tail_mass(1, 0), 1.0, 1e-15);
    }

    #[test]
    fn next_symbol_examples() {
        let m = two_state();
        assert_eq!(
            m.next_symbol_distribution(Some(Symbol(0))).unwrap(),
            NextSymbolLaw::Finite(vec![0.9, 0.1])
        );
        match m.next_symbol_distribution(None).unwrap() {
            NextSymbolLaw::Finite(p) => {
                close(p[0], 2.0 / 3.0, 1e-12);
                close(p[1], 1.0 / 3.0, 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
        assert_eq!(
            biased.next_symbol_distribution(Some(Symbol(1))).unwrap(),
            NextSymbolLaw::Finite(vec![0.7, 0.3])
        );
        assert!(biased.next_symbol_distribution(Some(Symbol(2))).is_err());
    }

    #[test]
    fn spec_round_trip_and_errors() {
        let m = MeasureModel::from_json_str(r#"{"kind":"markov","P":[[0.9,0.1],[0.2,0.8]]}"#).unwrap();
        close(m.stationary().unwrap()[0], 2.0 / 3.0, 1e-12);
        let again = MeasureModel::from_spec(&m.to_spec()).unwrap();
        assert_eq!(again, m);
        let g = MeasureModel::from_json_str(r#"{"kind":"geometric","theta":0.5}"#).unwrap();
        assert_eq!(g.alphabet_size(), None);
        assert!(MeasureModel::from_json_str(r#"{"kind":"bernoulli"}"#).is_err());
        assert!(MeasureModel::from_json_str(r#"{"kind":"bernoulli","p":[1.0],"q":1}"#).is_err());
        assert!(MeasureModel::from_json_str("not json").is_err());
    }
}
