//! Exponents of the weighted sums W_n^s and the tail integrand decay.
//!
//! cargo run --release --example weighted_sums

use hitstat::model::MeasureModel;
use hitstat::montecarlo::{self, CapPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let biased = MeasureModel::bernoulli(vec![0.7, 0.3])?;
    for s in [0.0, 0.5, 1.0, 2.0] {
        let w = montecarlo::wns_exponent_samples(&biased, 12, s, 500, 3, CapPolicy::Default)?;
        let summary = w.summary()?;
        println!("s = {s}: median {:.4}, limit h - sR(s) = {:.4}", summary.median, summary.target);
    }

    let coin = MeasureModel::fair_coin();
    for n in [6, 8, 10, 12] {
        let est = montecarlo::theorem2_integrand(&coin, n, 0.1, 1000, 0, 1)?;
        println!("n = {n:>2}: integral of F(e^(n eps)) = {:.4} +- {:.4}", est.estimate, est.stderr);
    }
    Ok(())
}
