use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{AttackKind, ExperimentConfig, Family};
use crate::attacks::{mc_set_accuracy, tvd_attack, whitebox_privgan, Aggregate, McResult, TvdResult};
use crate::data::{split, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::evalmetrics::{score_histograms, synthetic_trainset, utility_report, UtilityReport};
use crate::fsutil::write_atomic;
use crate::models::{disc_scores, train_gan, train_privgan, Checkpoint, TrainedModel};
use crate::numkit::{Matrix, Rng};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const ATTACK_REPORT_FILE: &str = "attack_report.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const UTILITY_REPORT_FILE: &str = "utility_report.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Lower-case hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the seed directory.
    pub path: String,
    pub sha256: String,
}

/// Written last, atomically, once every other artifact of a seed is in place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the `config.toml` stored next to the manifest.
    pub config_hash: String,
    pub seed: u64,
    pub run_id: String,
    pub family: Family,
    pub artifacts: BTreeMap<String, Artifact>,
    /// Training rows left out of the equal-size partition, in dataset row order.
    pub dropped_indices: Vec<usize>,
    pub wall_clock_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhiteBoxSummary {
    pub aggregate: Aggregate,
    pub accuracy: f64,
    /// Predicted training rows, best score first.
    pub predicted: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub train_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whitebox: Option<WhiteBoxSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tvd: Option<TvdResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McResult>,
}

/// Headline numbers of one seed; absent metrics were not requested.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub whitebox: Option<f64>,
    pub tvd: Option<f64>,
    pub mc: Option<f64>,
    pub downstream: Option<f64>,
    pub avg_entropy: Option<f64>,
    pub class_diversity: Option<f64>,
}

impl SeedMetrics {
    pub fn from_reports(attack: &AttackReport, utility: Option<&UtilityReport>) -> Self {
        Self {
            whitebox: attack.whitebox.as_ref().map(|w| w.accuracy),
            tvd: attack.tvd.as_ref().map(|t| t.score),
            mc: attack.mc.as_ref().map(|m| m.accuracy),
            downstream: utility.map(|u| u.downstream_accuracy),
            avg_entropy: utility.map(|u| u.avg_entropy),
            class_diversity: utility.map(|u| u.class_diversity),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub metrics: SeedMetrics,
}

/// Parallelism cap for seeds: `PRIVGAN_LAB_THREADS` when set to a positive
/// integer, otherwise the machine's available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("PRIVGAN_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn seed_dir(output_dir: &Path, seed: u64) -> PathBuf {
    output_dir.join(format!("seed-{seed}"))
}

fn train(
    config: &ExperimentConfig,
    data: &Matrix,
    seed: u64,
    epochs: usize,
) -> Result<(TrainedModel, crate::models::TrainTrace)> {
    let arch = config.arch_for(data.cols());
    match config.family {
        Family::Gan => {
            let gan = config.gan_config(seed, epochs);
            let (model, trace) = train_gan(data, &arch, &gan)?;
            Ok((TrainedModel::Gan { config: gan, model }, trace))
        }
        Family::Privgan => {
            let (model, trace) = train_privgan(data, &arch, &config.privgan_config(seed, epochs))?;
            Ok((TrainedModel::Privgan { model }, trace))
        }
    }
}

/// Runs the requested attacks on a trained model against the split it was trained on.
pub fn attack_model(
    model: &TrainedModel,
    config: &ExperimentConfig,
    data: &Dataset,
    plan: &SplitPlan,
    kinds: &[AttackKind],
    seed: u64,
) -> Result<(Option<WhiteBoxSummary>, Option<TvdResult>, Option<McResult>)> {
    let x = data.features();
    let needs_scores = kinds.iter().any(|k| matches!(k, AttackKind::Wb | AttackKind::Tvd));
    let scores = if needs_scores {
        Some(disc_scores(model, x)?)
    } else {
        None
    };
    let mut wb = None;
    let mut tvd = None;
    let mut mc = None;
    for kind in kinds {
        match kind {
            AttackKind::Wb => {
                let s = scores.as_ref().expect("scores computed");
                let r = whitebox_privgan(s, plan.train_fraction, &plan.membership(), config.attacks.aggregate)?;
                wb = Some(WhiteBoxSummary {
                    aggregate: config.attacks.aggregate,
                    accuracy: r.accuracy,
                    predicted: r.predicted,
                });
            }
            AttackKind::Tvd => {
                let s = scores.as_ref().expect("scores computed");
                tvd = Some(tvd_attack(
                    &s.select_rows(&plan.train_indices),
                    &s.select_rows(&plan.holdout_indices),
                    config.attacks.tvd_bins,
                )?);
            }
            AttackKind::Mc => {
                let rng = Rng::new(seed).substream("mc-attack");
                mc = Some(mc_set_accuracy(model, x, plan, &config.attacks.mc, &rng)?);
            }
        }
    }
    Ok((wb, tvd, mc))
}

/// Per-class downstream evaluation: a model per class trained on that class's
/// rows of a train/test split, then classifiers on synthetic and real data.
pub fn run_utility(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Option<UtilityReport>> {
    let Some(u) = &config.utility else {
        return Ok(None);
    };
    let plan = split(
        data.len(),
        1.0 - u.test_fraction,
        Rng::new(seed).substream("utility-split").next_u64(),
    )?;
    let real_train = data.subset(&plan.train_indices);
    let real_test = data.subset(&plan.holdout_indices);
    let classes = data.num_classes();
    let models = (0..classes)
        .into_par_iter()
        .map(|c| {
            let rows = real_train.subset(&real_train.class_indices(c));
            let class_seed = Rng::new(seed).substream(&format!("utility-class{c}")).next_u64();
            train(config, rows.features(), class_seed, u.epochs).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    let synthetic = synthetic_trainset(
        &models,
        &vec![u.samples_per_class; classes],
        &Rng::new(seed).substream("utility-samples"),
    )?;
    let mut classifier = u.classifier.clone();
    classifier.seed = seed;
    utility_report(&synthetic, &real_train, &real_test, &classifier).map(Some)
}

fn echo(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: PathBuf::new(),
        ..config.clone()
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Runs one seed end to end and writes its artifacts under `<output_dir>/seed-<seed>/`.
pub fn run_seed(config: &ExperimentConfig, config_bytes: &[u8], data: &Dataset, seed: u64) -> Result<SeedOutcome> {
    let started = Instant::now();
    let dir = seed_dir(&config.output_dir, seed);
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }
    let config_hash = sha256_hex(config_bytes);
    let plan = split(data.len(), config.split.f, seed)?;
    let train_x = data.features().select_rows(&plan.train_indices);
    let (model, trace) = train(config, &train_x, seed, config.train.epochs)?;
    let dropped_indices = match &model {
        TrainedModel::Privgan { model } => model.partition.dropped.iter().map(|&i| plan.train_indices[i]).collect(),
        TrainedModel::Gan { .. } => Vec::new(),
    };

    let mut files: Vec<(&str, &str, Vec<u8>)> = vec![("config", CONFIG_FILE, config_bytes.to_vec())];

    let mut checkpoint = Checkpoint::new(config.arch_for(data.dim()), seed, model, trace);
    checkpoint.context = serde_json::json!({ "config": echo(config), "split": plan });
    files.push(("checkpoint", CHECKPOINT_FILE, checkpoint.to_json()?.into_bytes()));
    let model = &checkpoint.model;

    let (whitebox, tvd, mc) = attack_model(model, config, data, &plan, &config.attacks.list, seed)?;
    let attack = AttackReport {
        seed,
        config_hash: config_hash.clone(),
        config: echo(config),
        train_fraction: plan.train_fraction,
        whitebox,
        tvd,
        mc,
    };
    files.push(("attack_report", ATTACK_REPORT_FILE, json_bytes(&attack)?));

    let hist = score_histograms(model, data.features(), &plan, config.attacks.tvd_bins, &Rng::new(seed))?;
    files.push(("histogram", HISTOGRAM_FILE, hist.histogram.to_csv().into_bytes()));

    let utility = run_utility(config, data, seed)?;
    if let Some(u) = &utility {
        files.push(("utility_report", UTILITY_REPORT_FILE, json_bytes(u)?));
    }

    let mut artifacts = BTreeMap::new();
    for (name, file, bytes) in &files {
        write_atomic(&dir.join(file), bytes)?;
        artifacts.insert(
            name.to_string(),
            Artifact {
                path: file.to_string(),
                sha256: sha256_hex(bytes),
            },
        );
    }
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        run_id: format!("{}-seed-{seed}", &config_hash[..12]),
        config_hash,
        seed,
        family: config.family,
        artifacts,
        dropped_indices,
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    write_atomic(&manifest_path, &json_bytes(&manifest)?)?;
    Ok(SeedOutcome {
        dir,
        manifest,
        metrics: SeedMetrics::from_reports(&attack, utility.as_ref()),
    })
}

/// Validates the config against its dataset and runs every seed, in parallel
/// up to [`thread_cap`]. Outcomes come back in seed-list order.
pub fn run_experiment(config: &ExperimentConfig, config_bytes: &[u8]) -> Result<Vec<SeedOutcome>> {
    config.validate()?;
    let data = config.dataset.load()?;
    config.validate_for(&data)?;
    with_pool(|| {
        config
            .seeds
            .par_iter()
            .map(|&s| run_seed(config, config_bytes, &data, s))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Loads a config file and runs it.
pub fn run_path(path: &Path) -> Result<Vec<SeedOutcome>> {
    let (config, bytes) = ExperimentConfig::load(path)?;
    run_experiment(&config, &bytes)
}
