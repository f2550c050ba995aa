//! JSON-configured experiments and their on-disk reports.
//!
//! A config names a model, one experiment and a seed:
//!
//! ```json
//! { "seed": 7,
//!   "model": { "kind": "bernoulli", "p": [0.5, 0.5] },
//!   "experiment": { "kind": "kac", "words": "111" },
//!   "tolerance": 1e-9 }
//! ```
//!
//! `model` may also be a path to a model file or `"builtin:<name>"`. Running
//! writes `report.csv` (deterministic rows) and `summary.json` (config echo,
//! version, model fingerprint, exact constants, timestamp, summary).

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimator::{self, EstimateSeries, SymbolMap};
use crate::exact::{self, Conditioning, ProductChain};
use crate::model::{MeasureModel, ModelSpec};
use crate::montecarlo::{self, CapPolicy, EmpiricalSurvival, ExponentSamples};
use crate::orbit::{sample_orbit, OrbitStream};
use crate::rng::{substream, Role};
use crate::stats;
use crate::survival::SurvivalCurve;
use crate::word::{Symbol, Word};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance for the certified Kac series.
const KAC_REL_TOL: f64 = 1e-12;
/// Largest `states * steps` product for which survival experiments also
/// compute the exact curve.
const EXACT_CURVE_BUDGET: u64 = 500_000_000;
/// Level of the DKW band around the exact curve.
const DKW_ALPHA: f64 = 0.001;

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad config, model or parameters. Nothing is written.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// Failure while computing or writing results.
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

fn invalid(msg: impl std::fmt::Display) -> RunError {
    RunError::Validation(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> RunError {
    RunError::Runtime(msg.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(ModelSpec),
    /// File path, or `builtin:<name>`.
    Named(String),
}

impl ModelSource {
    pub fn resolve(&self, base: Option<&Path>) -> Result<MeasureModel, RunError> {
        match self {
            ModelSource::Inline(spec) => MeasureModel::from_spec(spec).map_err(invalid),
            ModelSource::Named(name) => {
                if let Some(b) = name.strip_prefix("builtin:") {
                    return MeasureModel::builtins()
                        .into_iter()
                        .find(|(n, _)| *n == b)
                        .map(|(_, m)| m)
                        .ok_or_else(|| invalid(format!("unknown builtin model {b:?}")));
                }
                let path = match base {
                    Some(dir) if Path::new(name).is_relative() => dir.join(name),
                    _ => PathBuf::from(name),
                };
                MeasureModel::from_path(path).map_err(invalid)
            }
        }
    }
}

/// The cylinder an experiment targets: a literal word or a word of the given
/// length drawn from the model with the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Word(Word),
    Random { random_length: usize },
}

impl TargetSpec {
    pub fn resolve(&self, model: &MeasureModel, seed: u64) -> Result<Word, RunError> {
        match self {
            TargetSpec::Word(w) => Ok(w.clone()),
            TargetSpec::Random { random_length: 0 } => Err(invalid("random_length must be positive")),
            TargetSpec::Random { random_length } => Ok(pinned_word(model, seed, *random_length)),
        }
    }
}

/// The word of length `n` drawn from `model` on the auxiliary substream of `seed`.
pub fn pinned_word(model: &MeasureModel, seed: u64, n: usize) -> Word {
    let syms: Vec<Symbol> = OrbitStream::new(model, substream(seed, 0, Role::Aux)).take(n).collect();
    Word::new(syms).expect("n >= 1")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapSpec {
    Byte,
    Nibble,
    Bit,
    #[serde(untagged)]
    Table(Vec<u32>),
}

impl MapSpec {
    fn to_map(&self) -> Result<SymbolMap, RunError> {
        Ok(match self {
            MapSpec::Byte => SymbolMap::ByteIdentity,
            MapSpec::Nibble => SymbolMap::Nibble,
            MapSpec::Bit => SymbolMap::Bit,
            MapSpec::Table(t) => SymbolMap::custom(t).map_err(invalid)?,
        })
    }
}

fn default_starts() -> usize {
    1000
}

fn default_m_max() -> u64 {
    500
}

fn default_renyi_n() -> OneOrMany<usize> {
    OneOrMany::Many((1..=12).collect())
}

fn default_inner() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    EntranceExponent {
        n: OneOrMany<usize>,
        samples: u64,
        #[serde(default)]
        cap: CapPolicy,
    },
    RecurrenceExponent {
        n: OneOrMany<usize>,
        samples: u64,
        #[serde(default)]
        cap: CapPolicy,
    },
    Survival {
        target: TargetSpec,
        samples: u64,
        t_grid: Vec<f64>,
    },
    ReturnSurvival {
        target: TargetSpec,
        samples: u64,
        t_grid: Vec<f64>,
    },
    Kac {
        words: OneOrMany<Word>,
    },
    Hlv {
        words: OneOrMany<Word>,
        #[serde(default = "default_m_max")]
        m_max: u64,
    },
    AbadiShape {
        target: TargetSpec,
        t_grid: Vec<f64>,
    },
    Theorem2 {
        n: OneOrMany<usize>,
        epsilon: f64,
        outer: u64,
        #[serde(default = "default_inner")]
        inner: u64,
    },
    Wns {
        n: OneOrMany<usize>,
        s: f64,
        samples: u64,
        #[serde(default)]
        diagonal: bool,
        #[serde(default)]
        cap: CapPolicy,
    },
    RenyiExact {
        s: OneOrMany<f64>,
        #[serde(default = "default_renyi_n")]
        n: OneOrMany<usize>,
    },
    StreamEstimate {
        /// Input file; when absent a sequence of `synthetic_length` symbols
        /// is drawn from the model.
        #[serde(default)]
        input: Option<PathBuf>,
        #[serde(default)]
        synthetic_length: Option<usize>,
        #[serde(default)]
        map: Option<MapSpec>,
        n: OneOrMany<usize>,
        #[serde(default = "default_starts")]
        starts: usize,
        #[serde(default)]
        renyi_s: Vec<f64>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::EntranceExponent { .. } => "entrance-exponent",
            Experiment::RecurrenceExponent { .. } => "recurrence-exponent",
            Experiment::Survival { .. } => "survival",
            Experiment::ReturnSurvival { .. } => "return-survival",
            Experiment::Kac { .. } => "kac",
            Experiment::Hlv { .. } => "hlv",
            Experiment::AbadiShape { .. } => "abadi-shape",
            Experiment::Theorem2 { .. } => "theorem2",
            Experiment::Wns { .. } => "wns",
            Experiment::RenyiExact { .. } => "renyi-exact",
            Experiment::StreamEstimate { .. } => "stream-estimate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelSource,
    pub experiment: Experiment,
    /// Declared tolerance; when present a miss exits with code 4.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub outdir: Option<PathBuf>,
}

/// A parsed config plus everything needed to run it.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    /// The config as written, echoed into the report header.
    pub raw: Value,
    pub model: MeasureModel,
    /// Directory relative paths in the config resolve against.
    pub base: Option<PathBuf>,
}

impl Prepared {
    pub fn from_json_str(text: &str, base: Option<&Path>) -> Result<Self, RunError> {
        let raw: Value = serde_json::from_str(text).map_err(invalid)?;
        let config: ExperimentConfig = serde_json::from_value(raw.clone()).map_err(invalid)?;
        let model = config.model.resolve(base)?;
        let prepared = Prepared { config, raw, model, base: base.map(Path::to_path_buf) };
        prepared.validate()?;
        Ok(prepared)
    }

    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text, path.parent())
    }

    fn validate(&self) -> Result<(), RunError> {
        let positive_ns = |ns: &OneOrMany<usize>| {
            let v = ns.to_vec();
            if v.is_empty() || v.contains(&0) {
                Err(invalid("cylinder lengths must be positive and non-empty"))
            } else {
                Ok(())
            }
        };
        let positive_count = |c: u64| if c == 0 { Err(invalid("sample count must be positive")) } else { Ok(()) };
        let grid = |g: &[f64]| {
            if g.is_empty() || g.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                Err(invalid("t_grid must be non-empty with positive finite times"))
            } else {
                Ok(())
            }
        };
        if let Some(tol) = self.config.tolerance {
            if !(tol >= 0.0) {
                return Err(invalid("tolerance must be non-negative"));
            }
        }
        let seed = self.config.seed;
        let target_ok = |t: &TargetSpec| -> Result<(), RunError> {
            let w = t.resolve(&self.model, seed)?;
            self.check_word(&w)
        };
        match &self.config.experiment {
            Experiment::EntranceExponent { n, samples, .. } | Experiment::RecurrenceExponent { n, samples, .. } => {
                positive_ns(n)?;
                positive_count(*samples)
            }
            Experiment::Survival { target, samples, t_grid } | Experiment::ReturnSurvival { target, samples, t_grid } => {
                positive_count(*samples)?;
                grid(t_grid)?;
                target_ok(target)
            }
            Experiment::Kac { words } | Experiment::Hlv { words, .. } => {
                let ws = words.to_vec();
                if ws.is_empty() {
                    return Err(invalid("no words given"));
                }
                ws.iter().try_for_each(|w| self.check_word(w))
            }
            Experiment::AbadiShape { target, t_grid } => {
                grid(t_grid)?;
                target_ok(target)
            }
            Experiment::Theorem2 { n, epsilon, outer, .. } => {
                positive_ns(n)?;
                positive_count(*outer)?;
                if !(*epsilon > 0.0) {
                    return Err(invalid("epsilon must be positive"));
                }
                Ok(())
            }
            Experiment::Wns { n, s, samples, .. } => {
                positive_ns(n)?;
                positive_count(*samples)?;
                if !(*s >= 0.0 && s.is_finite()) {
                    return Err(invalid("s must be non-negative"));
                }
                Ok(())
            }
            Experiment::RenyiExact { s, n } => {
                positive_ns(n)?;
                let s = s.to_vec();
                if s.is_empty() || s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(invalid("s must be positive"));
                }
                Ok(())
            }
            Experiment::StreamEstimate { input, synthetic_length, map, n, starts, renyi_s } => {
                positive_ns(n)?;
                match (input, synthetic_length) {
                    (Some(_), None) => {
                        map.as_ref().ok_or_else(|| invalid("a symbol map is required for file input"))?.to_map()?;
                    }
                    (None, Some(len)) if *len > 0 => {}
                    _ => return Err(invalid("give exactly one of input or a positive synthetic_length")),
                }
                if *starts == 0 {
                    return Err(invalid("starts must be positive"));
                }
                if renyi_s.iter().any(|v| !(*v > 0.0)) {
                    return Err(invalid("renyi_s entries must be positive"));
                }
                Ok(())
            }
        }
    }

    fn check_word(&self, w: &Word) -> Result<(), RunError> {
        let lm = self.model.log_cylinder_measure(w).map_err(invalid)?;
        if lm.is_zero() {
            return Err(invalid(format!("target {w} has zero measure")));
        }
        Ok(())
    }

    /// Runs the experiment on the current rayon pool.
    pub fn execute(&self) -> Result<Outcome, RunError> {
        let model = &self.model;
        let seed = self.config.seed;
        let tol = self.config.tolerance;
        match &self.config.experiment {
            Experiment::EntranceExponent { n, samples, cap } => {
                exponent_outcome(n, |n| montecarlo::entrance_exponent_samples(model, n, *samples, seed, *cap), tol)
            }
            Experiment::RecurrenceExponent { n, samples, cap } => {
                exponent_outcome(n, |n| montecarlo::recurrence_exponent_samples(model, n, *samples, seed, *cap), tol)
            }
            Experiment::Wns { n, s, samples, diagonal, cap } => exponent_outcome(
                n,
                |n| {
                    if *diagonal {
                        montecarlo::wns_diagonal_exponent_samples(model, n, *s, *samples, seed, *cap)
                    } else {
                        montecarlo::wns_exponent_samples(model, n, *s, *samples, seed, *cap)
                    }
                },
                tol,
            ),
            Experiment::Survival { target, samples, t_grid } => {
                let w = target.resolve(model, seed)?;
                let emp = montecarlo::empirical_survival(model, &w, *samples, t_grid, seed).map_err(runtime)?;
                survival_outcome(model, &w, emp, Conditioning::Entrance, tol)
            }
            Experiment::ReturnSurvival { target, samples, t_grid } => {
                let w = target.resolve(model, seed)?;
                let emp = montecarlo::empirical_return_survival(model, &w, *samples, t_grid, seed).map_err(runtime)?;
                survival_outcome(model, &w, emp, Conditioning::Return, tol)
            }
            Experiment::Kac { words } => kac_outcome(model, &words.to_vec(), tol),
            Experiment::Hlv { words, m_max } => hlv_outcome(model, &words.to_vec(), *m_max, tol),
            Experiment::AbadiShape { target, t_grid } => {
                let w = target.resolve(model, seed)?;
                let r = exact::abadi_shape_check(model, &w, t_grid).map_err(runtime)?;
                let rows = r.curve.iter().map(|(t, f)| vec![t.to_string(), f.to_string()]).collect();
                let gap = (r.fitted_rate - r.asymptotic_rate).abs();
                Ok(Outcome {
                    header: vec!["t".into(), "survival".into()],
                    rows,
                    summary: json!({
                        "word": w.to_string(),
                        "fitted_rate": r.fitted_rate,
                        "intercept": r.intercept,
                        "asymptotic_rate": r.asymptotic_rate,
                        "floor": r.floor,
                        "points_used": r.points_used,
                        "bound_holds": r.bound_holds,
                        "max_violation": r.max_violation,
                        "rate_gap": gap,
                    }),
                    passed: tol.map(|t| r.bound_holds && gap <= t),
                })
            }
            Experiment::Theorem2 { n, epsilon, outer, inner } => {
                let mut rows = vec![];
                let mut estimates = vec![];
                for n in n.to_vec() {
                    let e = montecarlo::theorem2_integrand(model, n, *epsilon, *outer, *inner, seed).map_err(runtime)?;
                    rows.push(vec![
                        n.to_string(),
                        e.epsilon.to_string(),
                        e.estimate.to_string(),
                        e.stderr.to_string(),
                        e.exact_inner.to_string(),
                        e.outer_samples.to_string(),
                    ]);
                    estimates.push(e);
                }
                let decreasing = estimates.windows(2).all(|p| p[1].estimate < p[0].estimate);
                Ok(Outcome {
                    header: ["n", "epsilon", "estimate", "stderr", "exact_inner", "outer_samples"].map(String::from).to_vec(),
                    rows,
                    summary: json!({ "estimates": estimates, "strictly_decreasing": decreasing }),
                    passed: tol.map(|_| decreasing),
                })
            }
            Experiment::RenyiExact { s, n } => renyi_outcome(model, &s.to_vec(), &n.to_vec(), tol),
            Experiment::StreamEstimate { input, synthetic_length, map, n, starts, renyi_s } => {
                let seq: Vec<Symbol> = match (input, synthetic_length) {
                    (Some(path), _) => {
                        let path = match &self.base {
                            Some(b) if path.is_relative() => b.join(path),
                            _ => path.clone(),
                        };
                        let map = map.as_ref().expect("validated").to_map()?;
                        estimator::ingest_path(&path, &map).map_err(runtime)?
                    }
                    (None, Some(len)) => sample_orbit(model, seed, *len).symbols().to_vec(),
                    (None, None) => unreachable!("validated"),
                };
                stream_outcome(model, &seq, &n.to_vec(), *starts, renyi_s, seed, tol)
            }
        }
    }
}

/// Result of an experiment before it is written out.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
    /// `None` when no tolerance was declared.
    pub passed: Option<bool>,
}

impl Outcome {
    pub fn csv_bytes(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(&self.header).map_err(runtime)?;
        for r in &self.rows {
            w.write_record(r).map_err(runtime)?;
        }
        w.into_inner().map_err(runtime)
    }
}

fn exponent_outcome(
    ns: &OneOrMany<usize>,
    mut sample: impl FnMut(usize) -> Result<ExponentSamples, montecarlo::McError>,
    tol: Option<f64>,
) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut per_n = vec![];
    let mut passed = true;
    for n in ns.to_vec() {
        let e = sample(n).map_err(runtime)?;
        let summary = e.summary().map_err(runtime)?;
        let (below, above, outside) = e.exceedance(0.15);
        if let Some(t) = tol {
            passed &= (summary.median - summary.target).abs() <= t;
        }
        for s in &e.samples {
            rows.push(vec![
                n.to_string(),
                s.index.to_string(),
                s.time.steps().to_string(),
                s.time.is_censored().to_string(),
                s.exponent.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
        per_n.push(json!({
            "n": n,
            "summary": summary,
            "exceedance_0.15": { "below": below, "above": above, "outside": outside },
        }));
    }
    Ok(Outcome {
        header: ["n", "index", "time", "censored", "exponent"].map(String::from).to_vec(),
        rows,
        summary: json!({ "per_n": per_n }),
        passed: tol.map(|_| passed),
    })
}

fn survival_outcome(
    model: &MeasureModel,
    w: &Word,
    emp: EmpiricalSurvival,
    cond: Conditioning,
    tol: Option<f64>,
) -> Result<Outcome, RunError> {
    let mut rows: Vec<Vec<String>> = emp.curve.csv_rows().into_iter().map(|r| r.to_vec()).collect();
    let eps = stats::dkw_epsilon(emp.times.len(), DKW_ALPHA);
    let m_max = emp.curve.steps.last().copied().unwrap_or(0);
    let chain = ProductChain::build(model, w, cond).map_err(runtime)?;
    let mut exact_diff = Value::Null;
    if (chain.state_count() as u64).saturating_mul(m_max.max(1)) <= EXACT_CURVE_BUDGET {
        let exact: SurvivalCurve = exact::exact_survival(&chain, m_max).restrict(&emp.curve.steps);
        exact_diff = json!(emp.curve.max_abs_difference(&exact));
        rows.extend(exact.csv_rows().into_iter().map(|r| r.to_vec()));
    }
    let within_band = exact_diff.as_f64().map(|d| d <= eps);
    Ok(Outcome {
        header: SurvivalCurve::csv_header().map(String::from).to_vec(),
        rows,
        summary: json!({
            "word": w.to_string(),
            "measure": emp.curve.scale,
            "ks": emp.ks,
            "censored": emp.censored,
            "mean_time": emp.mean_time,
            "mean_stderr": emp.mean_stderr,
            "expected_return": 1.0 / emp.curve.scale,
            "dkw_epsilon": eps,
            "max_diff_to_exact": exact_diff,
            "within_dkw_band": within_band,
        }),
        passed: tol.map(|t| emp.ks.statistic <= t && within_band.unwrap_or(true)),
    })
}

fn kac_outcome(model: &MeasureModel, words: &[Word], tol: Option<f64>) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut worst = 0.0f64;
    let mut results = vec![];
    for w in words {
        let r = exact::exact_mean_return(model, w, KAC_REL_TOL).map_err(runtime)?;
        worst = worst.max(r.kac_residual);
        rows.push(vec![
            w.to_string(),
            r.measure.to_string(),
            r.expected_return.to_string(),
            r.kac_residual.to_string(),
            r.terms.to_string(),
        ]);
        results.push(r);
    }
    let mut summary = json!({ "max_kac_residual": worst, "words": words.len() });
    if let [r] = results.as_slice() {
        summary["expected_return"] = json!(r.expected_return);
        summary["kac_residual"] = json!(r.kac_residual);
        summary["measure"] = json!(r.measure);
    }
    Ok(Outcome {
        header: ["word", "measure", "expected_return", "kac_residual", "terms"].map(String::from).to_vec(),
        rows,
        summary,
        passed: tol.map(|t| worst <= t),
    })
}

fn hlv_outcome(model: &MeasureModel, words: &[Word], m_max: u64, tol: Option<f64>) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut worst = 0.0f64;
    for w in words {
        let r = exact::hlv_residual(model, w, m_max).map_err(runtime)?;
        worst = worst.max(r.max_residual);
        rows.push(vec![w.to_string(), r.max_residual.to_string(), r.argmax.to_string(), r.kac_residual.to_string()]);
    }
    Ok(Outcome {
        header: ["word", "max_residual", "argmax", "kac_residual"].map(String::from).to_vec(),
        rows,
        summary: json!({ "max_residual": worst, "m_max": m_max }),
        passed: tol.map(|t| worst <= t),
    })
}

fn renyi_outcome(model: &MeasureModel, ss: &[f64], ns: &[usize], tol: Option<f64>) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut entries = vec![];
    let mut passed = true;
    for &s in ss {
        let r = model.renyi_entropy(s).map_err(runtime)?;
        let mut last_diff = f64::NAN;
        for &n in ns {
            let log_z = model.partition_sum_exact(n, s).map_err(runtime)?;
            let slope = -log_z / (s * n as f64);
            last_diff = slope - r;
            rows.push(vec![s.to_string(), n.to_string(), log_z.to_string(), slope.to_string(), r.to_string()]);
        }
        if let Some(t) = tol {
            passed &= last_diff.abs() <= t;
        }
        entries.push(json!({ "s": s, "R": r, "final_slope_gap": last_diff }));
    }
    let mut summary = json!({ "h": model.shannon_entropy(), "entries": entries });
    if let [s] = ss {
        summary["R"] = json!(model.renyi_entropy(*s).map_err(runtime)?);
    }
    Ok(Outcome {
        header: ["s", "n", "log_z", "slope", "renyi"].map(String::from).to_vec(),
        rows,
        summary,
        passed: tol.map(|_| passed),
    })
}

fn stream_outcome(
    model: &MeasureModel,
    seq: &[Symbol],
    ns: &[usize],
    starts: usize,
    renyi_s: &[f64],
    seed: u64,
    tol: Option<f64>,
) -> Result<Outcome, RunError> {
    let mut series = estimator::ow_entropy_estimate(seq, ns, starts, seed).map_err(runtime)?;
    let h = model.shannon_entropy();
    let mut passed = series.rows.iter().all(|r| tol.is_none_or(|t| (r.estimate_nats - h).abs() <= t));
    let mut references = vec![json!({ "method": "ow-recurrence", "reference": h })];
    for &s in renyi_s {
        let r = model.renyi_entropy(s).map_err(runtime)?;
        for &n in ns {
            let est = estimator::plugin_renyi_estimate(seq, n, s).map_err(runtime)?;
            passed &= tol.is_none_or(|t| (est.estimate_nats - r).abs() <= t);
            series.rows.push(est);
        }
        references.push(json!({ "method": "plugin-renyi", "s": s, "reference": r }));
    }
    let rows = series.csv_rows().into_iter().map(|r| r.to_vec()).collect();
    Ok(Outcome {
        header: EstimateSeries::csv_header().map(String::from).to_vec(),
        rows,
        summary: json!({ "length": seq.len(), "estimates": series.rows, "references": references }),
        passed: tol.map(|_| passed),
    })
}

/// SHA-256 of the model's canonical JSON form.
pub fn model_fingerprint(model: &MeasureModel) -> String {
    let canonical = serde_json::to_string(&model.to_spec()).expect("spec serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Exact constants attached to every report.
fn exact_constants(model: &MeasureModel, experiment: &Experiment) -> Value {
    let mut out = json!({ "h_mu": model.shannon_entropy() });
    let s_values: Vec<f64> = match experiment {
        Experiment::Wns { s, .. } if *s > 0.0 => vec![*s],
        Experiment::RenyiExact { s, .. } => s.to_vec(),
        Experiment::StreamEstimate { renyi_s, .. } => renyi_s.clone(),
        _ => vec![],
    };
    if !s_values.is_empty() {
        let r: Vec<Value> = s_values
            .iter()
            .map(|&s| json!({ "s": s, "R": model.renyi_entropy(s).ok() }))
            .collect();
        out["renyi"] = json!(r);
    }
    out
}

/// What a finished run wrote.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub outdir: PathBuf,
    pub outcome: Outcome,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.outcome.passed {
            Some(false) => 4,
            _ => 0,
        }
    }
}

/// Runs on a pool of `workers` threads and writes the report files.
pub fn run(prepared: &Prepared, workers: Option<usize>, outdir: Option<&Path>) -> Result<RunReport, RunError> {
    let outdir = outdir
        .map(Path::to_path_buf)
        .or_else(|| {
            prepared.config.outdir.as_ref().map(|d| match &prepared.base {
                Some(b) if d.is_relative() => b.join(d),
                _ => d.clone(),
            })
        })
        .unwrap_or_else(|| PathBuf::from("hitstat-out"));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(invalid("worker count must be positive"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(runtime)?;
    let outcome = pool.install(|| prepared.execute())?;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "header": {
            "config": prepared.raw,
            "version": VERSION,
            "model_fingerprint": model_fingerprint(&prepared.model),
            "exact": exact_constants(&prepared.model, &prepared.config.experiment),
            "timestamp_unix": timestamp,
        },
        "kind": prepared.config.experiment.kind(),
        "summary": outcome.summary,
        "tolerance": prepared.config.tolerance,
        "passed": outcome.passed,
    });
    let csv = outcome.csv_bytes()?;
    std::fs::create_dir_all(&outdir).map_err(|e| runtime(format!("{}: {e}", outdir.display())))?;
    std::fs::write(outdir.join("report.csv"), csv).map_err(runtime)?;
    let mut text = serde_json::to_string_pretty(&summary).map_err(runtime)?;
    text.push('\n');
    std::fs::write(outdir.join("summary.json"), text).map_err(runtime)?;
    Ok(RunReport { outdir, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prepare(text: &str) -> Result<Prepared, RunError> {
        Prepared::from_json_str(text, None)
    }

    #[test]
    fn kac_config_reports_reciprocal_measure() {
        let p = prepare(
            r#"{"seed": 1, "model": {"kind": "bernoulli", "p": [0.5, 0.5]},
                "experiment": {"kind": "kac", "words": "111"}, "tolerance": 1e-9}"#,
        )
        .unwrap();
        let out = p.execute().unwrap();
        assert!((out.summary["expected_return"].as_f64().unwrap() - 8.0).abs() < 1e-12);
        assert!(out.summary["kac_residual"].as_f64().unwrap() <= 1e-9);
        assert_eq!(out.passed, Some(true));
    }

    #[test]
    fn renyi_exact_uniform() {
        let p = prepare(
            r#"{"seed": 1, "model": {"kind": "bernoulli", "p": [0.25, 0.25, 0.25, 0.25]},
                "experiment": {"kind": "renyi-exact", "s": 2}}"#,
        )
        .unwrap();
        let out = p.execute().unwrap();
        assert!((out.summary["R"].as_f64().unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(out.passed, None);
    }

    #[test]
    fn validation_errors() {
        let bad = [
            r#"{"model": "builtin:fair-coin", "experiment": {"kind": "kac", "words": "1"}}"#,
            r#"{"seed": 1, "model": {"kind": "bernoulli", "p": [0.5, 0.6]}, "experiment": {"kind": "kac", "words": "1"}}"#,
            r#"{"seed": 1, "model": "builtin:nope", "experiment": {"kind": "kac", "words": "1"}}"#,
            r#"{"seed": 1, "model": "builtin:fair-coin", "experiment": {"kind": "teleport"}}"#,
            r#"{"seed": 1, "model": "builtin:fair-coin", "experiment": {"kind": "kac", "words": "2"}}"#,
            r#"{"seed": 1, "model": "builtin:fair-coin", "experiment": {"kind": "theorem2", "n": 4, "epsilon": 0, "outer": 3}}"#,
            r#"{"seed": 1, "model": "builtin:fair-coin", "experiment": {"kind": "survival", "target": "1", "samples": 0, "t_grid": [1]}}"#,
            r#"{"seed": 1, "model": "builtin:fair-coin", "experiment": {"kind": "kac", "words": "1", "extra": 3}}"#,
            r#"{"seed": 1, "model": "/nonexistent/model.json", "experiment": {"kind": "kac", "words": "1"}}"#,
            "not json",
        ];
        for text in bad {
            assert!(matches!(prepare(text), Err(RunError::Validation(_))), "{text}");
        }
    }

    #[test]
    fn random_target_is_pinned() {
        let coin = MeasureModel::fair_coin();
        let t = TargetSpec::Random { random_length: 10 };
        assert_eq!(t.resolve(&coin, 1).unwrap(), t.resolve(&coin, 1).unwrap());
        assert_eq!(t.resolve(&coin, 1).unwrap().len(), 10);
    }

    #[test]
    fn fingerprint_is_stable() {
        let a = model_fingerprint(&MeasureModel::fair_coin());
        assert_eq!(a.len(), 64);
        assert_eq!(a, model_fingerprint(&MeasureModel::uniform(2).unwrap()));
        assert_ne!(a, model_fingerprint(&MeasureModel::uniform(3).unwrap()));
    }

    #[test]
    fn rows_do_not_depend_on_workers() {
        let p = prepare(
            r#"{"seed": 5, "model": "builtin:two-state-markov",
                "experiment": {"kind": "entrance-exponent", "n": [4, 6], "samples": 300}}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = run(&p, Some(1), Some(&dir.path().join("a"))).unwrap();
        let b = run(&p, Some(4), Some(&dir.path().join("b"))).unwrap();
        let ra = std::fs::read(a.outdir.join("report.csv")).unwrap();
        let rb = std::fs::read(b.outdir.join("report.csv")).unwrap();
        assert_eq!(ra, rb);
        assert!(!ra.contains(&b'\r'));
    }
}
