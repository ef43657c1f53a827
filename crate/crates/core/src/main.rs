use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use privgan_lab::experiment::{
    attack_checkpoint, evaluate, parse_named_rows, parse_values, report, run_path, run_sweep, AttackKind,
    ExperimentConfig, SweepAxis, TheoryOp,
};
use privgan_lab::Result;

/// Train GAN and privGAN models, attack them, and check the theory.
#[derive(Parser)]
#[command(name = "privgan-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Wb,
    Tvd,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config.
    Run { config: PathBuf },
    /// Run the config once per value of one axis.
    Sweep {
        config: PathBuf,
        /// lambda, N or epochs.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 0.1,1,10.
        #[arg(long)]
        values: String,
    },
    /// Re-run one attack on a saved checkpoint.
    Attack {
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        attack: AttackArg,
    },
    /// Evaluate a closed-form result on distributions from a `name,v1,v2,...` file.
    Theory {
        /// adversary, c-lambda, discriminators or tradeoff.
        op: String,
        vectors: PathBuf,
    },
    /// Verify run directories and summarize their metrics.
    Report { dir: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            for o in run_path(&config)? {
                println!("{} -> {}", o.manifest.run_id, o.dir.display());
            }
        }
        Command::Sweep { config, axis, values } => {
            let axis: SweepAxis = axis.parse()?;
            let values = parse_values(&values)?;
            let (config, _) = ExperimentConfig::load(&config)?;
            let result = run_sweep(&config, axis, &values)?;
            println!("{}", result.csv_path.display());
            println!("{}", result.medians_path.display());
        }
        Command::Attack { checkpoint, attack } => {
            let kind = match attack {
                AttackArg::Wb => AttackKind::Wb,
                AttackArg::Tvd => AttackKind::Tvd,
                AttackArg::Mc => AttackKind::Mc,
            };
            let out = attack_checkpoint(&checkpoint, kind)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Theory { op, vectors } => {
            let op: TheoryOp = op.parse()?;
            let text = std::fs::read_to_string(&vectors).map_err(|e| privgan_lab::Error::Io {
                path: vectors.clone(),
                source: e,
            })?;
            let out = evaluate(op, &parse_named_rows(&text)?)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Report { dir } => {
            let (summary, _) = report(&dir)?;
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("privgan-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
