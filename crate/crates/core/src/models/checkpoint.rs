use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchSpec, GanConfig, GanModel, Generative, PrivGanModel, TrainTrace};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::numkit::MlpModel;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Gan { config: GanConfig, model: GanModel },
    Privgan { model: PrivGanModel },
}

impl TrainedModel {
    pub fn family(&self) -> &'static str {
        match self {
            TrainedModel::Gan { .. } => "gan",
            TrainedModel::Privgan { .. } => "privgan",
        }
    }
}

impl Generative for TrainedModel {
    fn generators(&self) -> &[MlpModel] {
        match self {
            TrainedModel::Gan { model, .. } => model.generators(),
            TrainedModel::Privgan { model } => model.generators(),
        }
    }

    fn discriminators(&self) -> &[MlpModel] {
        match self {
            TrainedModel::Gan { model, .. } => model.discriminators(),
            TrainedModel::Privgan { model } => model.discriminators(),
        }
    }
}

/// Self-contained JSON snapshot of a trained model. Floats are written in
/// their shortest round-trip decimal form, so equal models give equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub arch: ArchSpec,
    pub seed: u64,
    pub model: TrainedModel,
    pub trace: TrainTrace,
    /// Free-form run context (dataset, split) used to re-run attacks later.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub context: serde_json::Value,
}

impl Checkpoint {
    pub fn new(arch: ArchSpec, seed: u64, model: TrainedModel, trace: TrainTrace) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            arch,
            seed,
            model,
            trace,
            context: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::contract(format!(
                "checkpoint format {} is not supported (expected {CHECKPOINT_FORMAT_VERSION})",
                ck.format_version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fsutil::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path.as_ref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{train_privgan, PrivGanConfig};
    use crate::numkit::Matrix;

    #[test]
    fn round_trip_is_exact() {
        let data = Matrix::from_vec(16, 2, (0..32).map(|i| (i as f64 / 31.0) * 1.8 - 0.9).collect()).unwrap();
        let arch = ArchSpec {
            latent_dim: 3,
            gen_hidden: vec![5],
            disc_hidden: vec![5],
            data_dim: 2,
        };
        let cfg = PrivGanConfig {
            epochs: 2,
            dp_init_epochs: 1,
            co_train_delay: 1,
            batch_size: 4,
            ..PrivGanConfig::default()
        };
        let (model, trace) = train_privgan(&data, &arch, &cfg).unwrap();
        let ck = Checkpoint::new(arch, cfg.seed, TrainedModel::Privgan { model }, trace);
        let text = ck.to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_json().unwrap(), text);
        let bumped = text.replacen("\"format_version\":1", "\"format_version\":9", 1);
        assert!(Checkpoint::from_json(&bumped).is_err());
    }
}
