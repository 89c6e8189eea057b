//! Runs a JSON config through the library and prints the table instead of
//! writing files.
//!
//! Usage: `run_config [path]` (defaults to the constant multiplication config)

use specmeasure::{cli, RunConfig};

fn main() -> specmeasure::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/constant_multiplication.json").into());
    let cfg = RunConfig::from_json(&std::fs::read_to_string(&path)?)?;
    let report = cli::execute(&cfg)?;
    print!("{}", cli::to_csv(&report.result));
    for w in &report.result.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{:.3} s", report.wall_time);
    Ok(())
}
