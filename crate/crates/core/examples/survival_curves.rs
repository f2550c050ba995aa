//! Rescaled entrance-time survival against exp(-t), empirical and exact.
//!
//! cargo run --release --example survival_curves

use hitstat::exact::{self, Conditioning, ProductChain};
use hitstat::experiment::pinned_word;
use hitstat::model::MeasureModel;
use hitstat::montecarlo;
use hitstat::stats;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coin = MeasureModel::fair_coin();
    let grid: Vec<f64> = (1..=30).map(|i| i as f64 * 0.1).collect();

    for target in ["1".parse()?, pinned_word(&coin, 1, 10)] {
        let emp = montecarlo::empirical_survival(&coin, &target, 5000, &grid, 1)?;
        let m_max = *emp.curve.steps.last().unwrap();
        let exact = exact::exact_survival(&ProductChain::build(&coin, &target, Conditioning::Entrance)?, m_max)
            .restrict(&emp.curve.steps);
        println!(
            "B = {target}: KS to exp(-t) = {:.4}, sup |empirical - exact| = {:.4} (DKW 99.9% = {:.4})",
            emp.ks.statistic,
            emp.curve.max_abs_difference(&exact),
            stats::dkw_epsilon(5000, 0.001)
        );
    }

    let ret = montecarlo::empirical_return_survival(&coin, &"0110".parse()?, 5000, &grid, 2)?;
    println!("mean return time to 0110: {:.2} +- {:.2} (Kac: 16)", ret.mean_time, ret.mean_stderr);

    let mut out = std::io::stdout().lock();
    ret.curve.write_csv(&mut out)?;
    Ok(())
}
