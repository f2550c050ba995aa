//! Acceptance criteria. Each prints one PASS/FAIL line; the process exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hitstat::engine;
use hitstat::estimator::{self, SymbolMap};
use hitstat::exact::{self, Conditioning, ProductChain};
use hitstat::experiment::pinned_word;
use hitstat::model::MeasureModel;
use hitstat::montecarlo::{self, CapPolicy};
use hitstat::orbit::{sample_orbit, OrbitStream};
use hitstat::stats;
use hitstat::word::Word;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn markov() -> MeasureModel {
    MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap()
}

fn binary_words(max_len: usize) -> Vec<Word> {
    (1..=max_len).flat_map(|n| Word::all(2, n)).collect()
}

fn renyi_consistency() -> Verdict {
    let mut ok = true;
    let mut notes = vec![];
    let m = markov();
    for s in [0.5, 1.0, 2.0] {
        let r = m.renyi_entropy(s).unwrap();
        let gaps: Vec<f64> = (4..=14)
            .map(|n| (-m.partition_sum_exact(n, s).unwrap() / (s * n as f64) - r).abs())
            .collect();
        let monotone = gaps.windows(2).all(|g| g[1] <= g[0]);
        let last = *gaps.last().unwrap();
        ok &= monotone && last <= 0.02;
        notes.push(format!("s={s}: gap(14)={last:.4} monotone={monotone}"));
    }
    let mut worst = 0.0f64;
    for b in [
        MeasureModel::fair_coin(),
        MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap(),
        MeasureModel::bernoulli(vec![0.5, 0.3, 0.2]).unwrap(),
    ] {
        for s in [0.5, 1.0, 2.0] {
            let r = b.renyi_entropy(s).unwrap();
            for n in 1..=14 {
                let slope = -b.partition_sum_exact(n, s).unwrap() / (s * n as f64);
                worst = worst.max((slope - r).abs());
            }
        }
    }
    ok &= worst <= 1e-10;
    notes.push(format!("bernoulli max gap {worst:.1e}"));
    verdict(ok, notes.join("; "))
}

fn kac_identity() -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for m in [MeasureModel::fair_coin(), markov()] {
        for w in binary_words(5) {
            if m.log_cylinder_measure(&w).unwrap().is_zero() {
                continue;
            }
            let r = exact::exact_mean_return(&m, &w, 1e-13).unwrap();
            worst = worst.max(r.kac_residual);
            checked += 1;
        }
    }
    verdict(worst <= 1e-8, format!("{checked} words, max |mu(B) E[tau] - 1| = {worst:.2e}"))
}

fn hlv_identity() -> Verdict {
    let mut worst = 0.0f64;
    for m in [MeasureModel::fair_coin(), markov()] {
        for w in ["1", "11", "10", "0110"] {
            let r = exact::hlv_residual(&m, &w.parse().unwrap(), 500).unwrap();
            worst = worst.max(r.max_residual);
        }
    }
    verdict(worst <= 1e-9, format!("max residual {worst:.2e}"))
}

/// First `i >= 1` at which `target` occurs in `x`, if any.
fn first_window(x: &[u32], target: &[u32]) -> Option<usize> {
    (1..).take_while(|i| i + target.len() <= x.len()).find(|&i| x[i..i + target.len()] == *target)
}

fn oracle_agreement() -> Verdict {
    let coin = MeasureModel::fair_coin();
    let m_max = 12usize;
    let mut worst = 0.0f64;
    for w in binary_words(4) {
        let b: Vec<u32> = w.symbols().iter().map(|s| s.0).collect();
        let len = m_max + b.len();
        let mut survive = vec![0.0f64; m_max + 1];
        for bits in 0u32..(1 << len) {
            let x: Vec<u32> = (0..len).map(|j| (bits >> (len - 1 - j)) & 1).collect();
            let first = first_window(&x, &b).unwrap_or(usize::MAX);
            let p = 0.5f64.powi(len as i32);
            for (m, slot) in survive.iter_mut().enumerate() {
                if first > m {
                    *slot += p;
                }
            }
        }
        let chain = ProductChain::build(&coin, &w, Conditioning::Entrance).unwrap();
        let curve = exact::exact_survival(&chain, m_max as u64);
        for m in 0..=m_max {
            worst = worst.max((curve.values[m] - survive[m]).abs());
        }
    }
    verdict(worst <= 1e-12, format!("30 words, m <= 12, max diff {worst:.1e}"))
}

fn exponential_law() -> Verdict {
    let coin = MeasureModel::fair_coin();
    let b = pinned_word(&coin, 1, 10);
    let t_grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.05).collect();
    let emp = montecarlo::empirical_survival(&coin, &b, 5000, &t_grid, 1).unwrap();
    let m_max = *emp.curve.steps.last().unwrap();
    let chain = ProductChain::build(&coin, &b, Conditioning::Entrance).unwrap();
    let exact = exact::exact_survival(&chain, m_max).restrict(&emp.curve.steps);
    let diff = emp.curve.max_abs_difference(&exact);
    let eps = stats::dkw_epsilon(5000, 0.001);
    let ok = emp.ks.statistic < 0.05 && diff <= eps;
    verdict(ok, format!("B={b} KS={:.4} band diff {diff:.4} <= {eps:.4}", emp.ks.statistic))
}

fn entropy_convergence() -> Verdict {
    let mut ok = true;
    let mut notes = vec![];
    for (name, m) in MeasureModel::builtins() {
        let e = montecarlo::entrance_exponent_samples(&m, 14, 2000, 1, CapPolicy::Default).unwrap();
        let total = e.samples.len() as f64;
        let v = e.values();
        let below = v.iter().filter(|&&x| x < e.target - 0.15).count() as f64 / total;
        // censored samples lie above h + 0.15 for any cap of at least 100 / mu
        let outside = (v.iter().filter(|&&x| (x - e.target).abs() > 0.15).count() + e.censored()) as f64 / total;
        ok &= outside <= 0.10 && below <= 0.05;
        notes.push(format!("{name}: outside={outside:.3} below={below:.3}"));
    }
    verdict(ok, notes.join("; "))
}

fn renyi_weighted_sums() -> Verdict {
    let coin = MeasureModel::fair_coin();
    let a = montecarlo::wns_exponent_samples(&coin, 14, 1.0, 1000, 1, CapPolicy::Default).unwrap();
    let sa = a.summary().unwrap();
    let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
    let b = montecarlo::wns_exponent_samples(&biased, 16, 1.0, 1000, 1, CapPolicy::Default).unwrap();
    let sb = b.summary().unwrap();
    let target_b = 0.7f64.ln() * -0.7 - 0.3 * 0.3f64.ln() + 0.58f64.ln();
    let ok = sa.median.abs() <= 0.1 && (sb.median - target_b).abs() <= 0.1 && (sb.target - target_b).abs() < 1e-12;
    verdict(ok, format!("coin median {:.4}; biased median {:.4} vs {target_b:.4}", sa.median, sb.median))
}

fn diagonal_identity() -> Verdict {
    let mut ok = true;
    let mut compared = 0;
    for (_, m) in MeasureModel::builtins() {
        for n in [4, 8, 12] {
            for seed in 0..100u64 {
                let mut x = OrbitStream::seeded(&m, seed);
                let z = Word::new(x.peek_prefix(n)).unwrap();
                let cap = engine::default_cap(&m, &z).unwrap();
                let w = engine::w_sum(&mut x, &z, 0.0, cap).unwrap();
                let mut y = OrbitStream::seeded(&m, seed);
                let tau = engine::recurrence_time(&mut y, n, cap).unwrap();
                ok &= w.time == tau && w.sum.value() == tau.steps() as f64;
                compared += 1;
            }
        }
    }
    verdict(ok, format!("{compared} orbits"))
}

fn summability_integrand() -> Verdict {
    let coin = MeasureModel::fair_coin();
    let estimates: Vec<montecarlo::IntegrandEstimate> = [6, 8, 10, 12]
        .iter()
        .map(|&n| montecarlo::theorem2_integrand(&coin, n, 0.1, 2000, 0, 1).unwrap())
        .collect();
    let exact = estimates.iter().all(|e| e.exact_inner);
    let decreasing = estimates.windows(2).all(|p| p[1].estimate < p[0].estimate);
    let values: Vec<String> = estimates.iter().map(|e| format!("{:.4}", e.estimate)).collect();
    verdict(exact && decreasing, format!("n=6,8,10,12 -> {}", values.join(", ")))
}

fn stream_loop_closure() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let m = markov();
    let seq = sample_orbit(&m, 1, 1_000_000);
    let path = dir.path().join("markov.bin");
    std::fs::write(&path, estimator::pack_bits(seq.symbols())).unwrap();
    let bits = estimator::ingest_path(&path, &SymbolMap::Bit).unwrap();
    assert_eq!(bits, seq.symbols());
    let ow = estimator::ow_entropy_estimate(&bits, &[14], 1000, 1).unwrap();
    let ow = ow.get(14).unwrap().estimate_nats;

    let constant = dir.path().join("constant.bin");
    std::fs::write(&constant, vec![0x41u8; 4096]).unwrap();
    let flat = estimator::ingest_path(&constant, &SymbolMap::ByteIdentity).unwrap();
    let zero = estimator::ow_entropy_estimate(&flat, &[1, 4, 16], 200, 1).unwrap();
    let zero_ok = zero.rows.iter().all(|r| r.estimate_nats == 0.0);

    let biased = MeasureModel::bernoulli(vec![0.7, 0.3]).unwrap();
    let iid = sample_orbit(&biased, 1, 1_000_000);
    let plug = estimator::plugin_renyi_estimate(iid.symbols(), 8, 1.0).unwrap().estimate_nats;

    let ok = (ow - 0.3835).abs() <= 0.08 && zero_ok && (plug - 0.5447).abs() <= 0.05;
    verdict(ok, format!("OW {ow:.4} vs 0.3835; constant zero={zero_ok}; plug-in {plug:.4} vs 0.5447"))
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        r#"{"seed": 3, "model": "builtin:two-state-markov", "experiment": {"kind": "entrance-exponent", "n": [4, 8], "samples": 400}}"#,
        r#"{"seed": 3, "model": "builtin:biased-coin", "experiment": {"kind": "recurrence-exponent", "n": 6, "samples": 400}}"#,
        r#"{"seed": 3, "model": "builtin:fair-coin", "experiment": {"kind": "survival", "target": {"random_length": 6}, "samples": 800, "t_grid": [0.5, 1, 2]}}"#,
        r#"{"seed": 3, "model": "builtin:fair-coin", "experiment": {"kind": "return-survival", "target": "0110", "samples": 800, "t_grid": [0.5, 1, 2]}}"#,
        r#"{"seed": 3, "model": "builtin:biased-coin", "experiment": {"kind": "wns", "n": 8, "s": 1.0, "samples": 300}}"#,
        r#"{"seed": 3, "model": "builtin:fair-coin", "experiment": {"kind": "theorem2", "n": [4, 6], "epsilon": 0.1, "outer": 100}}"#,
        r#"{"seed": 3, "model": "builtin:two-state-markov", "experiment": {"kind": "stream-estimate", "synthetic_length": 20000, "n": [2, 4], "starts": 300, "renyi_s": [1]}}"#,
    ];
    let exe = env!("CARGO_BIN_EXE_hitstat");
    let mut ok = true;
    for (i, text) in configs.iter().enumerate() {
        let cfg = dir.path().join(format!("exp{i}.json"));
        std::fs::write(&cfg, text).unwrap();
        let mut reports = vec![];
        for workers in ["1", "4"] {
            let out = dir.path().join(format!("out{i}-{workers}"));
            let status = Command::new(exe)
                .arg("--config")
                .arg(&cfg)
                .args(["--workers", workers])
                .arg("--outdir")
                .arg(&out)
                .stdout(std::process::Stdio::null())
                .status()
                .unwrap();
            ok &= status.success();
            reports.push(std::fs::read(Path::new(&out).join("report.csv")).unwrap_or_default());
        }
        ok &= !reports[0].is_empty() && reports[0] == reports[1];
    }
    verdict(ok, format!("{} configs, workers 1 vs 4", configs.len()))
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 11] = [
        ("exact renyi consistency", Duration::from_secs(1), renyi_consistency),
        ("kac identity", Duration::from_secs(5), kac_identity),
        ("entrance/return identity", Duration::from_secs(5), hlv_identity),
        ("exhaustive oracle agreement", Duration::from_secs(30), oracle_agreement),
        ("exponential law", Duration::from_secs(60), exponential_law),
        ("entrance exponent concentration", Duration::from_secs(300), entropy_convergence),
        ("weighted sum exponent", Duration::from_secs(600), renyi_weighted_sums),
        ("diagonal weighted sum identity", Duration::from_secs(10), diagonal_identity),
        ("summable tail integrand", Duration::from_secs(60), summability_integrand),
        ("stream estimator loop closure", Duration::from_secs(120), stream_loop_closure),
        ("report determinism", Duration::from_secs(60), cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let ok = v.ok && in_time;
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {:<34} {}  [{:.2}s / {}s] {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
