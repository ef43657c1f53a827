//! Config-driven experiments: per-seed training, attacks and utility metrics
//! with hashed, atomically written artifacts, plus sweeps, reports and a
//! command-line view of the closed-form results.

mod config;
mod report;
mod runner;
mod sweep;
mod theory_op;

use std::path::Path;

use serde::Serialize;

pub use config::{
    ArchConfig, AttackKind, AttackSpec, DatasetSpec, ExperimentConfig, Family, PrivGanSpec, SplitSpec, TrainSpec,
    UtilitySpec,
};
pub use report::{find_runs, report, verify_run, VerifiedRun, METRICS_FILE};
pub use runner::{
    attack_model, run_experiment, run_path, run_seed, run_utility, seed_dir, sha256_hex, thread_cap, Artifact,
    AttackReport, RunManifest, SeedMetrics, SeedOutcome, WhiteBoxSummary, ATTACK_REPORT_FILE, CHECKPOINT_FILE,
    CONFIG_FILE, HISTOGRAM_FILE, MANIFEST_FILE, TOOL_VERSION, UTILITY_REPORT_FILE,
};
pub use sweep::{
    median, parse_values, run_sweep, SweepAxis, SweepMedian, SweepResult, SweepRow, SWEEP_FILE, SWEEP_MEDIANS_FILE,
};
pub use theory_op::{evaluate, parse_named_rows, NamedRows, OracleAgreement, TheoryOp, TheoryOutput};

use crate::attacks::{McResult, TvdResult};
use crate::data::SplitPlan;
use crate::error::{Error, Result};
use crate::models::Checkpoint;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointAttack {
    pub attack: AttackKind,
    pub seed: u64,
    pub family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub whitebox: Option<WhiteBoxSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tvd: Option<TvdResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McResult>,
}

/// Re-runs one attack on a saved checkpoint, using the dataset and split
/// recorded in its context. Gives the same numbers as the original run.
pub fn attack_checkpoint(path: &Path, kind: AttackKind) -> Result<CheckpointAttack> {
    let ck = Checkpoint::load(path)?;
    let missing = |what: &str| Error::contract(format!("checkpoint {} has no `{what}` context", path.display()));
    let config: ExperimentConfig =
        serde_json::from_value(ck.context.get("config").cloned().ok_or_else(|| missing("config"))?)?;
    let plan: SplitPlan = serde_json::from_value(ck.context.get("split").cloned().ok_or_else(|| missing("split"))?)?;
    let data = config.dataset.load()?;
    if plan.total() != data.len() {
        return Err(Error::shape(
            "attack_checkpoint",
            format!(
                "recorded split covers {} rows, dataset has {}",
                plan.total(),
                data.len()
            ),
        ));
    }
    let (whitebox, tvd, mc) = attack_model(&ck.model, &config, &data, &plan, &[kind], ck.seed)?;
    Ok(CheckpointAttack {
        attack: kind,
        seed: ck.seed,
        family: ck.model.family(),
        whitebox,
        tvd,
        mc,
    })
}
