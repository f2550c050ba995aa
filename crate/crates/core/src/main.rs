use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hitstat::experiment::{self, Prepared};

/// Run one hitting-time experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "hitstat", version)]
struct Args {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "HITSTAT_WORKERS")]
    workers: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    outdir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = Prepared::from_path(&args.config)
        .and_then(|p| experiment::run(&p, args.workers, args.outdir.as_deref()));
    match result {
        Ok(report) => {
            let code = report.exit_code();
            if code != 0 {
                eprintln!("hitstat: declared tolerance not met");
            }
            println!("{}", report.outdir.display());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("hitstat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
