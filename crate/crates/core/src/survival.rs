//! Survival functions of entrance and return times.

use std::io::Write;

use serde::Serialize;

use crate::engine::TimeResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Entrance,
    Return,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exactness {
    Exact,
    Empirical { samples: usize },
}

/// `P(tau > m)` on an increasing grid of step counts `m`.
///
/// `scale` is the target measure `mu(B)`; the rescaled time of grid point `m`
/// is `t = m * mu(B)`. Because `P(tau >= m + 1) = P(tau > m)`, the value at
/// `m` is also the rescaled survival `F_B` evaluated at `t = (m + 1) mu(B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub kind: CurveKind,
    pub exactness: Exactness,
    pub scale: f64,
    pub steps: Vec<u64>,
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(kind: CurveKind, exactness: Exactness, scale: f64, steps: Vec<u64>, values: Vec<f64>) -> Self {
        assert_eq!(steps.len(), values.len());
        debug_assert!(steps.windows(2).all(|w| w[0] < w[1]), "grid must increase");
        SurvivalCurve { kind, exactness, scale, steps, values }
    }

    /// Empirical `P(tau > m)` on `steps`. Censored samples count as surviving.
    pub fn empirical(kind: CurveKind, scale: f64, steps: Vec<u64>, times: &[TimeResult]) -> Self {
        let mut sorted: Vec<u64> = times.iter().filter_map(|t| t.hit()).collect();
        sorted.sort_unstable();
        let total = times.len() as f64;
        let values = steps
            .iter()
            .map(|&m| {
                let at_most = sorted.partition_point(|&t| t <= m);
                (times.len() - at_most) as f64 / total
            })
            .collect();
        Self::new(kind, Exactness::Empirical { samples: times.len() }, scale, steps, values)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Value at grid step `m`, if present.
    pub fn at(&self, m: u64) -> Option<f64> {
        self.steps.binary_search(&m).ok().map(|i| self.values[i])
    }

    /// `(t, value)` pairs with `t = m * scale`.
    pub fn rescaled(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.steps.iter().zip(&self.values).map(|(&m, &v)| (m as f64 * self.scale, v))
    }

    /// Values lie in `[0, 1]`, do not increase, and equal 1 at `m = 0`.
    pub fn is_well_formed(&self) -> bool {
        let range = self.values.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v));
        let mono = self.values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let origin = self.at(0).is_none_or(|v| (v - 1.0).abs() < 1e-12);
        range && mono && origin
    }

    /// Largest gap to `other` over the steps both curves share.
    pub fn max_abs_difference(&self, other: &SurvivalCurve) -> f64 {
        self.steps
            .iter()
            .zip(&self.values)
            .filter_map(|(&m, &v)| other.at(m).map(|w| (v - w).abs()))
            .fold(0.0, f64::max)
    }

    /// Restrict to the given steps (which must be on the grid).
    pub fn restrict(&self, steps: &[u64]) -> SurvivalCurve {
        let values = steps.iter().map(|&m| self.at(m).expect("step on grid")).collect();
        SurvivalCurve::new(self.kind, self.exactness, self.scale, steps.to_vec(), values)
    }

    pub fn csv_header() -> [&'static str; 5] {
        ["m", "t", "survival", "kind", "exactness"]
    }

    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        let kind = match self.kind {
            CurveKind::Entrance => "entrance",
            CurveKind::Return => "return",
        };
        let exactness = match self.exactness {
            Exactness::Exact => "exact".to_string(),
            Exactness::Empirical { samples } => format!("empirical:{samples}"),
        };
        self.steps
            .iter()
            .zip(&self.values)
            .map(|(&m, &v)| {
                [m.to_string(), (m as f64 * self.scale).to_string(), v.to_string(), kind.into(), exactness.clone()]
            })
            .collect()
    }

    /// Comma separated, header row, LF line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(Self::csv_header())?;
        for row in self.csv_rows() {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid steps `ceil(t / mu) - 1` for rescaled times `t`, deduplicated.
///
/// The curve value at the returned step is `P(tau >= t / mu)`.
pub fn steps_for_times(t_grid: &[f64], scale: f64) -> Vec<u64> {
    let mut steps: Vec<u64> = t_grid
        .iter()
        .filter(|t| **t > 0.0)
        .map(|t| ((t / scale).ceil() as u64).saturating_sub(1))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}
