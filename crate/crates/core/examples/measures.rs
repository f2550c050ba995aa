//! Cylinder measures, entropies and partition sums of the built-in models.
//!
//! cargo run --example measures

use hitstat::model::MeasureModel;
use hitstat::word::Word;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut models = MeasureModel::builtins();
    models.push(("geometric-0.5", MeasureModel::geometric(0.5)?));

    for (name, m) in &models {
        println!("{name}");
        println!("  h          = {:.6} nats", m.shannon_entropy());
        for s in [0.5, 1.0, 2.0] {
            println!("  R({s:<3})     = {:.6}", m.renyi_entropy(s)?);
        }
        let w: Word = "0110".parse()?;
        println!("  mu({w})   = {:.6e}", m.log_cylinder_measure(&w)?.prob());
        for n in [4, 8, 12] {
            let slope = -m.partition_sum_exact(n, 1.0)? / n as f64;
            println!("  -(1/n) log Z_{n}(1) = {slope:.6}");
        }
        let phi = m.phi_bound(10)?;
        println!("  phi(10) <= {:.3e} (rho = {:.3})", phi.value, phi.rho);
    }

    let from_json = MeasureModel::from_json_str(r#"{"kind": "markov", "P": [[0.5, 0.5], [0.3, 0.7]]}"#)?;
    println!("json markov stationary law: {:?}", from_json.stationary().unwrap());
    Ok(())
}
