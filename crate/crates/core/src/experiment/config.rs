use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::{Aggregate, McAttackConfig, DEFAULT_TVD_BINS};
use crate::data::{load_csv, load_idx, make_mixture, ring_centers, Dataset};
use crate::error::{Error, Result};
use crate::evalmetrics::ClassifierConfig;
use crate::models::{ArchSpec, GanConfig, GenLoss, PrivGanConfig, PrivacyMode};
use crate::numkit::{Rng, NOISE_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gan,
    Privgan,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gan => "gan",
            Family::Privgan => "privgan",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// The bundled 8×8 digits.
    Digits,
    /// Gaussian mixture on a ring of `centers` points.
    Mixture {
        n: usize,
        centers: usize,
        radius: f64,
        sigma: f64,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
    },
    Idx {
        images: PathBuf,
        labels: Option<PathBuf>,
    },
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Digits => Ok(Dataset::digits()),
            DatasetSpec::Mixture {
                n,
                centers,
                radius,
                sigma,
                seed,
            } => make_mixture(
                &mut Rng::new(*seed).substream("mixture"),
                *n,
                &ring_centers(*centers, *radius),
                *sigma,
            ),
            DatasetSpec::Csv { path } => load_csv(path),
            DatasetSpec::Idx { images, labels } => load_idx(images, labels.as_deref()),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSpec::Csv { path } => fix(path),
            DatasetSpec::Idx { images, labels } => {
                fix(images);
                if let Some(l) = labels {
                    fix(l);
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    /// Fraction of rows used for training.
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    #[serde(default = "default_latent")]
    pub latent_dim: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
}

fn default_latent() -> usize {
    NOISE_DIM
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default)]
    pub gen_loss: GenLoss,
}

fn default_batch() -> usize {
    256
}

fn default_lr() -> f64 {
    2e-4
}

fn default_beta1() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivGanSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    pub lambda: Option<f64>,
    #[serde(default = "default_dp_init")]
    pub dp_init_epochs: usize,
    #[serde(default = "default_delay")]
    pub co_train_delay: usize,
    #[serde(default)]
    pub privacy_mode: PrivacyMode,
}

fn default_n() -> usize {
    2
}

fn default_dp_init() -> usize {
    50
}

fn default_delay() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Wb,
    Tvd,
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSpec {
    pub list: Vec<AttackKind>,
    pub aggregate: Aggregate,
    pub tvd_bins: usize,
    pub mc: McAttackConfig,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            list: vec![AttackKind::Wb, AttackKind::Tvd, AttackKind::Mc],
            aggregate: Aggregate::Max,
            tvd_bins: DEFAULT_TVD_BINS,
            mc: McAttackConfig::default(),
        }
    }
}

/// Per-class downstream evaluation: one model per class on a class-wise
/// training split, a labeled synthetic set, and classifiers on both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    /// Fraction of rows held out as the real test split.
    pub test_fraction: f64,
    /// Training epochs of each per-class model.
    pub epochs: usize,
    pub samples_per_class: usize,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub family: Family,
    pub dataset: DatasetSpec,
    pub split: SplitSpec,
    pub arch: ArchConfig,
    pub train: TrainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privgan: Option<PrivGanSpec>,
    #[serde(default)]
    pub attacks: AttackSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySpec>,
}

fn config_err(path: &str, detail: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        detail: detail.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text. Unknown keys are rejected and errors
    /// name the offending dotted key path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_err("<document>", e.to_string()))?;
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(
                if path == "." { "<document>" } else { &path },
                e.into_inner().message().to_string(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory. Returns the config and the raw file bytes.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| config_err("<document>", format!("not UTF-8: {e}")))?;
        let mut config = Self::from_toml(text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        config.dataset.resolve(base);
        Ok((config, bytes))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required"));
        }
        if !(self.split.f > 0.0 && self.split.f < 1.0) {
            return Err(config_err("split.f", format!("{} is outside (0, 1)", self.split.f)));
        }
        if self.train.batch_size == 0 {
            return Err(config_err("train.batch_size", "must be positive"));
        }
        if !(self.train.lr > 0.0) {
            return Err(config_err("train.lr", "must be positive"));
        }
        if !(self.train.beta1 > 0.0 && self.train.beta1 < 1.0) {
            return Err(config_err("train.beta1", "must lie in (0, 1)"));
        }
        if self.arch.latent_dim == 0
            || self
                .arch
                .gen_hidden
                .iter()
                .chain(&self.arch.disc_hidden)
                .any(|&w| w == 0)
        {
            return Err(config_err("arch", "layer widths must be positive"));
        }
        if self.family == Family::Privgan {
            let p = self
                .privgan
                .as_ref()
                .ok_or_else(|| config_err("privgan.lambda", "required when family = \"privgan\""))?;
            match p.lambda {
                None => return Err(config_err("privgan.lambda", "required when family = \"privgan\"")),
                Some(l) if !(l > 0.0 && l.is_finite()) => {
                    return Err(config_err("privgan.lambda", format!("must be positive, got {l}")))
                }
                _ => {}
            }
            if p.n < 2 {
                return Err(config_err("privgan.n", format!("must be at least 2, got {}", p.n)));
            }
        }
        if self.attacks.tvd_bins < 2 {
            return Err(config_err("attacks.tvd_bins", "must be at least 2"));
        }
        self.attacks
            .mc
            .validate()
            .map_err(|e| config_err("attacks.mc", e.to_string()))?;
        if let Some(u) = &self.utility {
            if !(u.test_fraction > 0.0 && u.test_fraction < 1.0) {
                return Err(config_err("utility.test_fraction", "must lie in (0, 1)"));
            }
            if u.samples_per_class == 0 {
                return Err(config_err("utility.samples_per_class", "must be positive"));
            }
        }
        Ok(())
    }

    /// Checks the data-dependent constraints: architecture width and the
    /// feasible range of `N` for the training split size.
    pub fn validate_for(&self, data: &Dataset) -> Result<()> {
        if let Family::Privgan = self.family {
            let n = self.privgan.as_ref().map_or(2, |p| p.n);
            let train = (self.split.f * data.len() as f64).round() as usize;
            let max = train / self.train.batch_size;
            if n > max {
                return Err(config_err(
                    "privgan.n",
                    format!(
                        "N={n} is infeasible: N lies in a bounded range [2, |X_train| / batch_size] = [2, {max}] \
                         for {train} training rows and batch size {}",
                        self.train.batch_size
                    ),
                ));
            }
        }
        if self.utility.is_some() && data.labels().is_none() {
            return Err(config_err("utility", "downstream evaluation needs a labeled dataset"));
        }
        if self.attacks.list.contains(&AttackKind::Mc) {
            let train = (self.split.f * data.len() as f64).round() as usize;
            let m = self.attacks.mc.m;
            if m > train || m > data.len() - train {
                return Err(config_err(
                    "attacks.mc.m",
                    format!("set size {m} exceeds the training ({train}) or holdout pool"),
                ));
            }
        }
        Ok(())
    }

    pub fn arch_for(&self, data_dim: usize) -> ArchSpec {
        ArchSpec {
            latent_dim: self.arch.latent_dim,
            gen_hidden: self.arch.gen_hidden.clone(),
            disc_hidden: self.arch.disc_hidden.clone(),
            data_dim,
        }
    }

    pub fn gan_config(&self, seed: u64, epochs: usize) -> GanConfig {
        GanConfig {
            epochs,
            batch_size: self.train.batch_size,
            lr: self.train.lr,
            beta1: self.train.beta1,
            seed,
            gen_loss: self.train.gen_loss,
        }
    }

    /// Only meaningful once [`Self::validate`] passed for a privGAN config.
    pub fn privgan_config(&self, seed: u64, epochs: usize) -> PrivGanConfig {
        let p = self.privgan.clone().unwrap_or(PrivGanSpec {
            n: default_n(),
            lambda: None,
            dp_init_epochs: default_dp_init(),
            co_train_delay: default_delay(),
            privacy_mode: PrivacyMode::WrongLabel,
        });
        PrivGanConfig {
            n: p.n,
            lambda: p.lambda.unwrap_or(1.0),
            epochs,
            dp_init_epochs: p.dp_init_epochs,
            co_train_delay: p.co_train_delay,
            batch_size: self.train.batch_size,
            lr: self.train.lr,
            beta1: self.train.beta1,
            seed,
            gen_loss: self.train.gen_loss,
            privacy_mode: p.privacy_mode,
        }
    }
}
