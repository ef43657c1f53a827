//! Sweeps the privacy weight on the toy config and prints per-value medians.

use std::path::PathBuf;

use privgan_lab::experiment::{run_sweep, ExperimentConfig, SweepAxis};

fn main() -> privgan_lab::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy-privgan.toml");
    let (mut config, _) = ExperimentConfig::load(&path.canonicalize().unwrap_or(path))?;
    config.output_dir = std::env::temp_dir().join("privgan-lab-lambda-sweep");
    config.train.epochs = 60;
    let result = run_sweep(&config, SweepAxis::Lambda, &[0.1, 1.0, 10.0])?;
    for m in &result.medians {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "lambda {:>4}: white-box {}  tvd {}  mc {}",
            m.value,
            show(m.metrics.whitebox),
            show(m.metrics.tvd),
            show(m.metrics.mc)
        );
    }
    println!("{}", result.csv_path.display());
    Ok(())
}
