//! Runs a JSON experiment config in-process, as the binary does.
//!
//! cargo run --release --example run_config -- examples/configs/kac.json

use std::path::PathBuf;

use hitstat::experiment::{self, Prepared};

fn main() {
    let path: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/kac.json")));
    let outdir = std::env::temp_dir().join("hitstat-example");
    let result = Prepared::from_path(&path).and_then(|p| experiment::run(&p, Some(2), Some(&outdir)));
    match result {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.outcome.summary).unwrap());
            println!("passed: {:?}; files in {}", report.outcome.passed, report.outdir.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
