//! Small statistics helpers: quantiles, KS distance to the unit exponential,
//! DKW bands.

use serde::Serialize;

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov-Smirnov distance between a sample and a reference law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub samples: usize,
    pub reference: &'static str,
}

/// `sup_t |P_hat(T >= t) - exp(-t)|` for rescaled times `T`.
///
/// `None` entries are right-censored beyond every observed value; they keep
/// the empirical survival from dropping below the censored fraction.
pub fn ks_unit_exponential(times: &[Option<f64>]) -> KsResult {
    let total = times.len();
    let mut observed: Vec<f64> = times.iter().flatten().copied().collect();
    observed.sort_by(f64::total_cmp);
    let nf = total as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < observed.len() {
        let v = observed[i];
        let mut j = i;
        while j < observed.len() && observed[j] == v {
            j += 1;
        }
        let reference = (-v).exp();
        // survival P_hat(T >= t) is (total - i)/n on (prev, v] and (total - j)/n just above v
        let at = (total - i) as f64 / nf;
        let above = (total - j) as f64 / nf;
        sup = sup.max((at - reference).abs()).max((above - reference).abs());
        i = j;
    }
    // beyond the last observation the survival stays at the censored fraction
    sup = sup.max((total - observed.len()) as f64 / nf);
    KsResult { statistic: sup, samples: total, reference: "unit-exponential" }
}

/// Half-width of the two-sided Dvoretzky-Kiefer-Wolfowitz band at level
/// `1 - alpha` for `n` samples.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&v), 2.5);
    }

    #[test]
    fn ks_single_point() {
        // one sample at t = 1: survival is 1 on (0, 1], 0 above
        let ks = ks_unit_exponential(&[Some(1.0)]);
        let expect = (1.0 - (-1.0f64).exp()).max((-1.0f64).exp());
        assert!((ks.statistic - expect).abs() < 1e-15);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 2000;
        let sample: Vec<Option<f64>> =
            (0..n).map(|i| Some(-(1.0 - (i as f64 + 0.5) / n as f64).ln())).collect();
        let ks = ks_unit_exponential(&sample);
        assert!(ks.statistic <= 0.5 / n as f64 + 1e-12, "{}", ks.statistic);
    }

    #[test]
    fn dkw_width() {
        let e = dkw_epsilon(5000, 1e-3);
        assert!((e - ((2000f64).ln() / 10_000.0).sqrt()).abs() < 1e-15);
    }
}
