//! Runs a config programmatically, then verifies and summarizes the output
//! directory the same way `privgan-lab report` does.
//!
//! `cargo run --release --example run_experiment -- configs/toy-privgan.toml`

use std::path::PathBuf;

use privgan_lab::experiment::{report, run_experiment, ExperimentConfig};

fn main() -> privgan_lab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy-privgan.toml"));
    let (config, bytes) = ExperimentConfig::load(&path.canonicalize().unwrap_or(path))?;
    for outcome in run_experiment(&config, &bytes)? {
        println!("{} ({} ms)", outcome.manifest.run_id, outcome.manifest.wall_clock_ms);
    }
    let (summary, _) = report(&config.output_dir)?;
    print!("{summary}");
    Ok(())
}
