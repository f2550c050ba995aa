//! Ensembles of (1/n) log tau for independent (x, z) and for the diagonal.
//!
//! cargo run --release --example exponents

use hitstat::model::MeasureModel;
use hitstat::montecarlo::{self, CapPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, m) in MeasureModel::builtins() {
        println!("{name}: h = {:.4}", m.shannon_entropy());
        for n in [6, 10, 14] {
            let e = montecarlo::entrance_exponent_samples(&m, n, 1000, 1, CapPolicy::Default)?;
            let r = montecarlo::recurrence_exponent_samples(&m, n, 1000, 1, CapPolicy::Default)?;
            let (se, sr) = (e.summary()?, r.summary()?);
            let (below, above, _) = e.exceedance(0.15);
            println!(
                "  n={n:>2}  entrance median {:.4}  recurrence median {:.4}  outside +-0.15: {below:.3} below, {above:.3} above",
                se.median, sr.median
            );
        }
    }
    Ok(())
}
