//! Exact entrance- and return-time laws.
//!
//! The matcher for the target word is run in lockstep with the symbol kernel.
//! A state of the resulting [`ProductChain`] is a pair (matcher state,
//! kernel context), where the context is the last symbol for Markov models and
//! trivial for independent ones. Matcher states at full depth absorb. Pushing
//! a probability vector through the chain yields `P(tau > m)` exactly, and
//! self-overlap of the target is handled by the matcher alone.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Matcher, StateId, WordMatcher};
use crate::model::{MeasureModel, ModelError};
use crate::survival::{CurveKind, Exactness, SurvivalCurve};
use crate::word::{Symbol, Word};

const RHO_TOL: f64 = 1e-15;
const RHO_CAP: usize = 2_000_000;
/// Hard stop for tail summation.
const MAX_TERMS: u64 = 500_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("target cylinder {0} has zero measure")]
    ZeroMeasureTarget(String),
    #[error("survival tail does not contract (spectral radius {0})")]
    TailNotContracting(f64),
    #[error("grid has fewer than two usable points above the floor")]
    GridTooCoarse,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// `x` drawn from the stationary law.
    Entrance,
    /// `x` drawn from the law conditioned on the target cylinder.
    Return,
}

/// How the countable alphabet is turned into finitely many branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alphabet {
    /// Pattern symbols individually plus one lumped "other" branch.
    Lumped,
    /// Symbols `0..levels` individually; the remaining mass is dropped.
    Truncated(u32),
}

/// One outgoing branch of the kernel: the symbol (`None` = lumped other),
/// its probability, and the resulting context.
type Branch = (Option<Symbol>, f64, u32);

/// Absorbing chain for the entrance or return time into a cylinder.
#[derive(Clone, Debug)]
pub struct ProductChain {
    /// `(matcher state, context)` per chain state.
    pub states: Vec<(StateId, u32)>,
    /// Outgoing `(state, probability)` lists; absorbing rows hold a self-loop.
    pub transitions: Vec<Vec<(u32, f64)>>,
    pub absorbing: Vec<bool>,
    pub initial: Vec<f64>,
    /// Steps to run before `m = 0`: the entrance law needs `n - 1` symbols
    /// before the first window closes.
    pub warmup: usize,
    pub target: Word,
    pub log_measure: f64,
    pub conditioning: Conditioning,
}

fn branches(model: &MeasureModel, matcher: &WordMatcher, ctx: u32, alphabet: Alphabet) -> Vec<Branch> {
    let ctx_of = |s: Symbol| if model.has_memory() { s.0 } else { 0 };
    match model {
        MeasureModel::Bernoulli(_) | MeasureModel::Markov(_) => {
            let k = model.alphabet_size().expect("finite") as u32;
            let prev = model.has_memory().then_some(Symbol(ctx));
            let law = model.next_symbol_distribution(prev).expect("valid context");
            (0..k)
                .map(Symbol)
                .map(|s| (Some(s), law.prob(s), ctx_of(s)))
                .filter(|b| b.1 > 0.0)
                .collect()
        }
        MeasureModel::Geometric(g) => match alphabet {
            Alphabet::Lumped => {
                let mut out: Vec<Branch> =
                    matcher.pattern_symbols().iter().map(|&s| (Some(s), g.prob(s), 0)).collect();
                let rest = 1.0 - out.iter().map(|b| b.1).sum::<f64>();
                out.push((None, rest, 0));
                out
            }
            Alphabet::Truncated(levels) => {
                (0..levels).map(|s| (Some(Symbol(s)), g.prob(Symbol(s)), 0)).collect()
            }
        },
    }
}

impl ProductChain {
    pub fn build(model: &MeasureModel, target: &Word, conditioning: Conditioning) -> Result<Self, ExactError> {
        Self::build_with(model, target, conditioning, Alphabet::Lumped)
    }

    pub fn build_with(
        model: &MeasureModel,
        target: &Word,
        conditioning: Conditioning,
        alphabet: Alphabet,
    ) -> Result<Self, ExactError> {
        let log_measure = model.log_cylinder_measure(target)?.ln();
        if log_measure == f64::NEG_INFINITY {
            return Err(ExactError::ZeroMeasureTarget(target.to_string()));
        }
        let matcher = WordMatcher::new(target);
        let n = target.len();
        let memory = model.has_memory();

        let seeds: Vec<((StateId, u32), f64)> = match conditioning {
            Conditioning::Entrance => {
                if memory {
                    model
                        .stationary()
                        .expect("finite")
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p > 0.0)
                        .map(|(c, &p)| ((0, c as u32), p))
                        .collect()
                } else {
                    vec![((0, 0), 1.0)]
                }
            }
            Conditioning::Return => {
                let syms = target.symbols();
                let q = syms[1..].iter().fold(matcher.start(), |q, &s| matcher.next_state(q, s));
                let ctx = if memory { target.last().0 } else { 0 };
                vec![((q, ctx), 1.0)]
            }
        };

        let mut index: HashMap<(StateId, u32), u32> = HashMap::new();
        let mut states = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for &(key, _) in &seeds {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                e.insert(states.len() as u32);
                states.push(key);
                queue.push_back(key);
            }
        }
        let mut transitions: Vec<Vec<(u32, f64)>> = Vec::new();
        let mut absorbing = Vec::new();
        let mut branch_cache: HashMap<u32, Vec<Branch>> = HashMap::new();
        while let Some((q, ctx)) = queue.pop_front() {
            let id = index[&(q, ctx)] as usize;
            if transitions.len() <= id {
                transitions.resize(id + 1, Vec::new());
                absorbing.resize(id + 1, false);
            }
            if matcher.is_match(q) {
                absorbing[id] = true;
                transitions[id] = vec![(id as u32, 1.0)];
                continue;
            }
            let bs = branch_cache
                .entry(ctx)
                .or_insert_with(|| branches(model, &matcher, ctx, alphabet))
                .clone();
            let mut row: Vec<(u32, f64)> = Vec::new();
            for (sym, p, next_ctx) in bs {
                let next_q = match sym {
                    Some(s) => matcher.next_state(q, s),
                    None => matcher.start(),
                };
                let key = (next_q, next_ctx);
                let to = *index.entry(key).or_insert_with(|| {
                    states.push(key);
                    queue.push_back(key);
                    (states.len() - 1) as u32
                });
                match row.iter_mut().find(|(t, _)| *t == to) {
                    Some(entry) => entry.1 += p,
                    None => row.push((to, p)),
                }
            }
            transitions[id] = row;
        }
        let mut initial = vec![0.0; states.len()];
        for (key, p) in seeds {
            initial[index[&key] as usize] += p;
        }
        Ok(ProductChain {
            states,
            transitions,
            absorbing,
            initial,
            warmup: match conditioning {
                Conditioning::Entrance => n - 1,
                Conditioning::Return => 0,
            },
            target: target.clone(),
            log_measure,
            conditioning,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn measure(&self) -> f64 {
        self.log_measure.exp()
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_defect(&self) -> f64 {
        self.transitions
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// One step of the transient mass; absorbed mass is discarded.
    fn step(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, row) in self.transitions.iter().enumerate() {
            let mass = v[s];
            if mass == 0.0 || self.absorbing[s] {
                continue;
            }
            for &(t, p) in row {
                out[t as usize] += mass * p;
            }
        }
        for (s, x) in out.iter_mut().enumerate() {
            if self.absorbing[s] {
                *x = 0.0;
            }
        }
    }

    /// `sum_m P(tau > m)` from the linear system `(I - Q) x = 1` on the
    /// transient block, for chains small enough to solve densely.
    ///
    /// Elimination works on transition and exit probabilities only, with
    /// each pivot formed as a sum of non-negative terms, so no cancellation
    /// occurs even when the mean is very large.
    pub fn mean_absorption_time(&self) -> Option<f64> {
        let transient: Vec<usize> = (0..self.states.len()).filter(|&s| !self.absorbing[s]).collect();
        let t = transient.len();
        if t > DENSE_SOLVE_LIMIT {
            return None;
        }
        let mut pos = vec![usize::MAX; self.states.len()];
        for (i, &s) in transient.iter().enumerate() {
            pos[s] = i;
        }
        let mut q = vec![0.0; t * t];
        let mut exit = vec![0.0; t];
        for (i, &s) in transient.iter().enumerate() {
            for &(to, p) in &self.transitions[s] {
                if self.absorbing[to as usize] {
                    exit[i] += p;
                } else {
                    q[i * t + pos[to as usize]] += p;
                }
            }
        }
        let mut rhs = vec![1.0; t];
        let mut pivot = vec![0.0; t];
        for k in 0..t {
            let d = exit[k] + (k + 1..t).map(|j| q[k * t + j]).sum::<f64>();
            if !(d > 0.0) {
                return None;
            }
            pivot[k] = d;
            for i in k + 1..t {
                let qik = q[i * t + k];
                if qik == 0.0 {
                    continue;
                }
                let f = qik / d;
                for j in k + 1..t {
                    if j != i {
                        q[i * t + j] += f * q[k * t + j];
                    }
                }
                exit[i] += f * exit[k];
                rhs[i] += f * rhs[k];
            }
        }
        let mut x = vec![0.0; t];
        for k in (0..t).rev() {
            let flow: f64 = (k + 1..t).map(|j| q[k * t + j] * x[j]).sum();
            x[k] = (rhs[k] + flow) / pivot[k];
        }
        let v = self.start_vector();
        Some(transient.iter().enumerate().map(|(i, &s)| v[s] * x[i]).sum())
    }

    /// Transient mass vector at `m = 0`.
    fn start_vector(&self) -> Vec<f64> {
        let mut v = self.initial.clone();
        let mut buf = vec![0.0; v.len()];
        for _ in 0..self.warmup {
            self.step(&v, &mut buf);
            std::mem::swap(&mut v, &mut buf);
        }
        v
    }

    /// Spectral radius of the transient block by damped power iteration.
    pub fn transient_spectral_radius(&self) -> f64 {
        let transient = self.absorbing.iter().filter(|a| !**a).count();
        if transient == 0 {
            return 0.0;
        }
        let mut v: Vec<f64> =
            self.absorbing.iter().map(|&a| if a { 0.0 } else { 1.0 / transient as f64 }).collect();
        let mut buf = vec![0.0; v.len()];
        let mut est = f64::NAN;
        for _ in 0..RHO_CAP {
            self.step(&v, &mut buf);
            // (vT + v) / 2 keeps the iteration aperiodic
            for (b, x) in buf.iter_mut().zip(&v) {
                *b = 0.5 * (*b + x);
            }
            let norm: f64 = buf.iter().sum();
            if norm == 0.0 {
                return 0.0;
            }
            buf.iter_mut().for_each(|x| *x /= norm);
            std::mem::swap(&mut v, &mut buf);
            let next = 2.0 * norm - 1.0;
            if (next - est).abs() <= RHO_TOL {
                return next.max(0.0);
            }
            est = next;
        }
        est.max(0.0)
    }
}

/// Largest transient block solved densely for mean times.
const DENSE_SOLVE_LIMIT: usize = 600;

/// `P(tau > m)` for `m = 0..=m_max`.
pub fn exact_survival(chain: &ProductChain, m_max: u64) -> SurvivalCurve {
    let mut v = chain.start_vector();
    let mut buf = vec![0.0; v.len()];
    let mut values = Vec::with_capacity(m_max as usize + 1);
    // tau >= 1, so P(tau > 0) = 1 whatever the rounding in the warmup
    values.push(1.0);
    for _ in 0..m_max {
        chain.step(&v, &mut buf);
        std::mem::swap(&mut v, &mut buf);
        values.push(v.iter().sum::<f64>().min(1.0));
    }
    let kind = match chain.conditioning {
        Conditioning::Entrance => CurveKind::Entrance,
        Conditioning::Return => CurveKind::Return,
    };
    SurvivalCurve::new(kind, Exactness::Exact, chain.measure(), (0..=m_max).collect(), values)
}

/// Survival values until the remaining tail sum is certified below
/// `rel_tol` times the running sum (and at least `min_terms` values).
struct TailSeries {
    values: Vec<f64>,
    /// Upper bound on `sum_{m >= values.len()} P(tau > m)`.
    remainder: f64,
    rho: f64,
}

fn certified_series(chain: &ProductChain, rel_tol: f64, min_terms: u64) -> Result<TailSeries, ExactError> {
    let rho = chain.transient_spectral_radius();
    if rho >= 1.0 - 1e-15 {
        return Err(ExactError::TailNotContracting(rho));
    }
    let mut v = chain.start_vector();
    let mut buf = vec![0.0; v.len()];
    let mut values = vec![v.iter().sum::<f64>()];
    let mut sum = values[0];
    loop {
        chain.step(&v, &mut buf);
        std::mem::swap(&mut v, &mut buf);
        let s = v.iter().sum::<f64>();
        let prev = *values.last().expect("non-empty");
        let ratio = if prev > 0.0 { s / prev } else { 0.0 };
        let r = rho.max(ratio);
        let remainder = if s == 0.0 { 0.0 } else { s / (1.0 - r) };
        if (values.len() as u64) >= min_terms && r < 1.0 && remainder <= rel_tol * sum {
            return Ok(TailSeries { values, remainder, rho });
        }
        values.push(s);
        sum += s;
        if values.len() as u64 > MAX_TERMS {
            return Err(ExactError::TailNotContracting(rho));
        }
    }
}

/// Expected return time with its Kac check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanReturn {
    /// `E_B[tau_B] = sum_{m >= 0} P_B(tau_B > m)`.
    pub expected_return: f64,
    pub measure: f64,
    /// `|mu(B) * E_B[tau_B] - 1|`; zero by Kac's lemma.
    pub kac_residual: f64,
    pub terms: usize,
    pub spectral_radius: f64,
}

pub fn exact_mean_return(model: &MeasureModel, target: &Word, rel_tol: f64) -> Result<MeanReturn, ExactError> {
    let chain = ProductChain::build(model, target, Conditioning::Return)?;
    let measure = chain.measure();
    let (expected_return, terms, spectral_radius) = match chain.mean_absorption_time() {
        Some(mean) => (mean, 0, chain.transient_spectral_radius()),
        None => {
            let series = certified_series(&chain, rel_tol, 1)?;
            // small terms last
            (series.values.iter().rev().sum(), series.values.len(), series.rho)
        }
    };
    Ok(MeanReturn {
        expected_return,
        measure,
        kac_residual: (measure * expected_return - 1.0).abs(),
        terms,
        spectral_radius,
    })
}

/// Discrete entrance/return identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HlvReport {
    /// `max_k |P(tau >= k) - mu(B) sum_{j >= k} P_B(tau >= j)|` over `1..=m_max`.
    pub max_residual: f64,
    pub argmax: u64,
    /// The `k = 1` term, which is Kac's lemma.
    pub kac_residual: f64,
    /// `(k, P(tau >= k), mu(B) * tail_k)` rows.
    pub rows: Vec<(u64, f64, f64)>,
}

pub fn hlv_residual(model: &MeasureModel, target: &Word, m_max: u64) -> Result<HlvReport, ExactError> {
    assert!(m_max >= 1, "m_max must be positive");
    let entrance = ProductChain::build(model, target, Conditioning::Entrance)?;
    let ret = ProductChain::build(model, target, Conditioning::Return)?;
    let series = certified_series(&ret, 1e-14, m_max)?;
    let mu = ret.measure();
    // suffix[j] = sum_{m >= j} P_B(tau > m)
    let mut suffix = vec![0.0; series.values.len() + 1];
    suffix[series.values.len()] = series.remainder;
    for j in (0..series.values.len()).rev() {
        suffix[j] = suffix[j + 1] + series.values[j];
    }
    let curve = exact_survival(&entrance, m_max - 1);
    let mut report = HlvReport { max_residual: 0.0, argmax: 1, kac_residual: 0.0, rows: Vec::new() };
    for k in 1..=m_max {
        // P(tau >= k) = P(tau > k - 1); sum_{j >= k} P_B(tau >= j) = sum_{m >= k-1} P_B(tau > m)
        let lhs = curve.values[(k - 1) as usize];
        let rhs = mu * suffix[(k - 1) as usize];
        let r = (lhs - rhs).abs();
        if k == 1 {
            report.kac_residual = r;
        }
        if r > report.max_residual {
            report.max_residual = r;
            report.argmax = k;
        }
        report.rows.push((k, lhs, rhs));
    }
    Ok(report)
}

/// Shape check of the rescaled entrance survival against an exponential
/// decay above an additive floor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbadiReport {
    /// Least-squares slope `M` of `log F_B(t) = a - M t` over the fit range.
    pub fitted_rate: f64,
    pub intercept: f64,
    /// `-log(rho) / mu(B)` from the transient spectral radius.
    pub asymptotic_rate: f64,
    /// `n mu(B) + phi(n)`.
    pub floor: f64,
    pub points_used: usize,
    /// `F_B(t) <= exp(-M t) + floor` at every grid point.
    pub bound_holds: bool,
    /// Largest positive part of `F_B(t) - exp(-M t) - floor`.
    pub max_violation: f64,
    /// `(t, F_B(t))` on the grid.
    pub curve: Vec<(f64, f64)>,
}

pub fn abadi_shape_check(model: &MeasureModel, target: &Word, t_grid: &[f64]) -> Result<AbadiReport, ExactError> {
    let chain = ProductChain::build(model, target, Conditioning::Entrance)?;
    let mu = chain.measure();
    let n = target.len();
    let phi = match model.phi_bound(n as u32) {
        Ok(b) => b.value,
        Err(ModelError::ContractionDegenerate) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    let floor = n as f64 * mu + phi;
    let mut grid: Vec<f64> = t_grid.iter().copied().filter(|t| *t > 0.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 {
        return Err(ExactError::GridTooCoarse);
    }
    // F_B(t) = P(tau >= ceil(t / mu)) = P(tau > ceil(t / mu) - 1)
    let step_of = |t: f64| ((t / mu).ceil() as u64).saturating_sub(1);
    let m_max = step_of(*grid.last().expect("non-empty"));
    let survival = exact_survival(&chain, m_max);
    let curve: Vec<(f64, f64)> = grid.iter().map(|&t| (t, survival.values[step_of(t) as usize])).collect();
    let fit: Vec<(f64, f64)> =
        curve.iter().filter(|(_, f)| *f >= floor && *f > 0.0).map(|&(t, f)| (t, f.ln())).collect();
    if fit.len() < 2 {
        return Err(ExactError::GridTooCoarse);
    }
    let k = fit.len() as f64;
    let mean_t = fit.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = fit.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = fit.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExactError::GridTooCoarse);
    }
    let sxy: f64 = fit.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let fitted_rate = -slope;
    let intercept = mean_y - slope * mean_t;
    let max_violation = curve
        .iter()
        .map(|&(t, f)| f - (-fitted_rate * t).exp() - floor)
        .fold(0.0, f64::max);
    let rho = chain.transient_spectral_radius();
    Ok(AbadiReport {
        fitted_rate,
        intercept,
        asymptotic_rate: -rho.ln() / mu,
        floor,
        points_used: fit.len(),
        bound_holds: max_violation <= 1e-12,
        max_violation,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn two_state() -> MeasureModel {
        MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap()
    }

    #[test]
    fn single_symbol_target_is_geometric() {
        let coin = MeasureModel::fair_coin();
        let chain = ProductChain::build(&coin, &w("1"), Conditioning::Entrance).unwrap();
        assert!(chain.state_count() <= 2 * 2);
        let curve = exact_survival(&chain, 30);
        for (m, v) in curve.values.iter().enumerate() {
            assert!((v - 0.5f64.powi(m as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn chain_size_and_stochasticity() {
        let m = two_state();
        for target in ["0110", "111", "0101010", "1"] {
            for cond in [Conditioning::Entrance, Conditioning::Return] {
                let c = ProductChain::build(&m, &w(target), cond).unwrap();
                assert!(c.state_count() <= (target.len() + 1) * 2, "{target}");
                assert!(c.row_sum_defect() < 1e-12);
                for (s, row) in c.transitions.iter().enumerate() {
                    if c.absorbing[s] {
                        assert_eq!(row, &vec![(s as u32, 1.0)]);
                    }
                }
                assert!((c.initial.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_measure_target_rejected() {
        let forbidden = MeasureModel::markov(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
            None,
        )
        .unwrap();
        assert!(matches!(
            ProductChain::build(&forbidden, &w("02"), Conditioning::Entrance),
            Err(ExactError::ZeroMeasureTarget(_))
        ));
    }

    #[test]
    fn lumped_geometric_equals_truncated_full_chain() {
        let g = MeasureModel::geometric(0.5).unwrap();
        for target in ["12", "121", "2112"] {
            for cond in [Conditioning::Entrance, Conditioning::Return] {
                let lumped = ProductChain::build(&g, &w(target), cond).unwrap();
                let full = ProductChain::build_with(&g, &w(target), cond, Alphabet::Truncated(60)).unwrap();
                let a = exact_survival(&lumped, 200);
                let b = exact_survival(&full, 200);
                assert!(a.max_abs_difference(&b) < 1e-14, "{target}");
            }
        }
    }

    #[test]
    fn kac_examples() {
        let coin = MeasureModel::fair_coin();
        let r = exact_mean_return(&coin, &w("111"), 1e-12).unwrap();
        assert!((r.expected_return - 8.0).abs() < 8e-12 * 10.0);
        let r = exact_mean_return(&coin, &w("1"), 1e-12).unwrap();
        assert!((r.expected_return - 2.0).abs() < 1e-10);
        let r = exact_mean_return(&two_state(), &w("01"), 1e-12).unwrap();
        assert!((r.expected_return - 15.0).abs() < 15.0 * 1e-10, "{}", r.expected_return);
    }

    #[test]
    fn series_agrees_with_dense_solve() {
        for (model, target) in [
            (MeasureModel::fair_coin(), "0110"),
            (two_state(), "1101"),
            (MeasureModel::geometric(0.5).unwrap(), "210"),
        ] {
            let chain = ProductChain::build(&model, &w(target), Conditioning::Return).unwrap();
            let solved = chain.mean_absorption_time().unwrap();
            let series = certified_series(&chain, 1e-13, 1).unwrap();
            let summed: f64 = series.values.iter().rev().sum();
            assert!((summed - solved).abs() <= 1e-11 * solved, "{target}: {summed} vs {solved}");
            assert!(series.remainder <= 1e-13 * summed);
        }
    }

    #[test]
    fn spectral_radius_of_simple_chain() {
        let coin = MeasureModel::fair_coin();
        let chain = ProductChain::build(&coin, &w("1"), Conditioning::Return).unwrap();
        assert!((chain.transient_spectral_radius() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hlv_examples() {
        let coin = MeasureModel::fair_coin();
        let r = hlv_residual(&coin, &w("11"), 20).unwrap();
        assert!(r.kac_residual <= 1e-10);
        assert!(r.max_residual <= 1e-10, "{}", r.max_residual);
        let r = hlv_residual(&two_state(), &w("0110"), 60).unwrap();
        assert!(r.max_residual <= 1e-10, "{}", r.max_residual);
    }

    #[test]
    fn abadi_fair_coin_single_symbol() {
        let coin = MeasureModel::fair_coin();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let r = abadi_shape_check(&coin, &w("1"), &grid).unwrap();
        assert!((r.fitted_rate - 4f64.ln()).abs() < 1e-12, "{}", r.fitted_rate);
        assert!((r.asymptotic_rate - 4f64.ln()).abs() < 1e-10);
        assert_eq!(r.floor, 0.5);
        assert!(r.bound_holds);
    }

    #[test]
    fn abadi_rates_positive() {
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
        for (_, m) in MeasureModel::builtins() {
            for target in ["0110", "111111", "01"] {
                let r = abadi_shape_check(&m, &w(target), &grid);
                if let Ok(r) = r {
                    assert!(r.fitted_rate > 0.0);
                    assert!(r.asymptotic_rate > 0.0);
                }
            }
        }
        let coin = MeasureModel::fair_coin();
        assert_eq!(abadi_shape_check(&coin, &w("1"), &[0.5]), Err(ExactError::GridTooCoarse));
    }
}
