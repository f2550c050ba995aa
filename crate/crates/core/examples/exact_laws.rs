//! Exact entrance and return laws from the product chain: survival curves,
//! Kac's mean return time and the entrance/return identity.
//!
//! cargo run --example exact_laws

use hitstat::exact::{self, Conditioning, ProductChain};
use hitstat::model::MeasureModel;
use hitstat::word::Word;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coin = MeasureModel::fair_coin();
    for w in ["1", "11", "10", "0110"] {
        let target: Word = w.parse()?;
        let entrance = exact::exact_survival(&ProductChain::build(&coin, &target, Conditioning::Entrance)?, 8);
        let ret = exact::exact_survival(&ProductChain::build(&coin, &target, Conditioning::Return)?, 8);
        let kac = exact::exact_mean_return(&coin, &target, 1e-12)?;
        let hlv = exact::hlv_residual(&coin, &target, 500)?;
        println!("B = {w}");
        println!("  P(tau > m), m = 0..8, entrance: {:.4?}", entrance.values);
        println!("  P(tau > m), m = 0..8, return:   {:.4?}", ret.values);
        println!("  E_B[tau] = {:.6}, 1/mu(B) = {:.6}", kac.expected_return, 1.0 / kac.measure);
        println!("  identity residual over m <= 500: {:.2e}", hlv.max_residual);
    }

    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
    let abadi = exact::abadi_shape_check(&coin, &"0110".parse()?, &grid)?;
    println!(
        "fitted decay {:.4} vs asymptotic {:.4} on {} points; bound holds: {}",
        abadi.fitted_rate, abadi.asymptotic_rate, abadi.points_used, abadi.bound_holds
    );
    Ok(())
}
