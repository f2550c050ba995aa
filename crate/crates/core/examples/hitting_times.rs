//! Entrance, recurrence and hitting counts along one sampled orbit.
//!
//! cargo run --example hitting_times

use hitstat::engine;
use hitstat::model::MeasureModel;
use hitstat::orbit::OrbitStream;
use hitstat::word::Word;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = MeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None)?;
    let target: Word = "0110".parse()?;
    let cap = engine::default_cap(&chain, &target)?;

    for seed in 0..5 {
        let tau = engine::entrance_time(&mut OrbitStream::seeded(&chain, seed), &target, cap)?;
        let rec = engine::recurrence_time(&mut OrbitStream::seeded(&chain, seed), 6, 1 << 20)?;
        println!("seed {seed}: entrance into {target} = {tau:?}, 6-recurrence = {rec:?}");
    }

    let ones: Vec<Word> = vec!["11".parse()?];
    let hits = engine::hitting_number(&mut OrbitStream::seeded(&chain, 1), &ones, 10_000)?;
    let mu = chain.log_cylinder_measure(&ones[0])?.prob();
    println!("visits to [11] in 10^4 steps: {hits} (expected about {:.0})", mu * 10_000.0);

    let w = engine::w_sum(&mut OrbitStream::seeded(&chain, 1), &target, 1.0, cap)?;
    println!("W^1 up to entrance: ln W = {:.4}, time {:?}", w.ln(), w.time);
    Ok(())
}
