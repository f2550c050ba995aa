//! Entropy estimates from a byte file: recurrence times and n-gram counts.
//!
//! cargo run --release --example stream_entropy [FILE]
//!
//! Without a file, a bit stream from the two-state chain is written to a
//! temporary file first.

use hitstat::estimator::{self, SymbolMap};
use hitstat::model::MeasureModel;
use hitstat::orbit::sample_orbit;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None)?;
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("hitstat-markov.bin");
            std::fs::write(&p, estimator::pack_bits(sample_orbit(&chain, 1, 1_000_000).symbols()))?;
            p
        }
    };
    let seq = estimator::ingest_path(&path, &SymbolMap::Bit)?;
    println!("{} symbols from {}", seq.len(), path.display());

    let ow = estimator::ow_entropy_estimate(&seq, &[4, 8, 14], 1000, 1)?;
    let mut series = ow.clone();
    for n in [4, 8] {
        series.rows.push(estimator::plugin_renyi_estimate(&seq, n, 1.0)?);
    }
    series.write_csv(std::io::stdout().lock())?;
    println!("chain: h = {:.4}, R(1) = {:.4}", chain.shannon_entropy(), chain.renyi_entropy(1.0)?);
    Ok(())
}
