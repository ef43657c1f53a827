//! Baseline GAN and privGAN: architectures, training schedules, sampling,
//! discriminator scores and Monte-Carlo estimates of the value function.

mod checkpoint;
mod train;

pub use checkpoint::{Checkpoint, TrainedModel, CHECKPOINT_FORMAT_VERSION};
pub(crate) use train::softmax_epoch;
pub use train::{train_gan, train_privgan, GanTrainer, PrivGanTrainer};

use serde::{Deserialize, Serialize};

use crate::data::Partition;
use crate::error::{Error, Result};
use crate::numkit::{sample_noise, Activation, Matrix, MlpModel, Rng, EPS_CLAMP, NOISE_DIM};

/// Layer widths shared by every network of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub latent_dim: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    pub data_dim: usize,
}

impl ArchSpec {
    pub fn new(data_dim: usize, gen_hidden: &[usize], disc_hidden: &[usize]) -> Self {
        Self {
            latent_dim: NOISE_DIM,
            gen_hidden: gen_hidden.to_vec(),
            disc_hidden: disc_hidden.to_vec(),
            data_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.data_dim == 0 {
            return Err(Error::contract(format!(
                "latent_dim={} and data_dim={} must be positive",
                self.latent_dim, self.data_dim
            )));
        }
        if self.gen_hidden.iter().chain(&self.disc_hidden).any(|&w| w == 0) {
            return Err(Error::contract("hidden layer widths must be positive"));
        }
        Ok(())
    }

    fn stack(input: usize, hidden: &[usize], output: usize, last: Activation, rng: &mut Rng) -> Result<MlpModel> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        let mut acts = vec![Activation::leaky(); hidden.len()];
        acts.push(last);
        MlpModel::new(&dims, &acts, rng)
    }

    /// `latent → hidden… → data`, LeakyReLU hidden layers, tanh output.
    pub fn generator(&self, rng: &mut Rng) -> Result<MlpModel> {
        Self::stack(self.latent_dim, &self.gen_hidden, self.data_dim, Activation::Tanh, rng)
    }

    /// `data → hidden… → 1`, sigmoid output.
    pub fn discriminator(&self, rng: &mut Rng) -> Result<MlpModel> {
        Self::stack(self.data_dim, &self.disc_hidden, 1, Activation::Sigmoid, rng)
    }

    /// `data → hidden… → N`, softmax output.
    pub fn privacy_discriminator(&self, n: usize, rng: &mut Rng) -> Result<MlpModel> {
        Self::stack(self.data_dim, &self.disc_hidden, n, Activation::Softmax, rng)
    }
}

/// Generator adversarial loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenLoss {
    /// `−log D(G(z))`.
    #[default]
    NonSaturating,
    /// `log(1 − D(G(z)))`.
    Saturating,
}

/// How generators are pushed against the privacy discriminator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyMode {
    /// Cross-entropy toward a random index other than the generator's own.
    #[default]
    WrongLabel,
    /// Minimize `log D_p^j(G_j(z))` directly.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub seed: u64,
    #[serde(default)]
    pub gen_loss: GenLoss,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 256,
            lr: 2e-4,
            beta1: 0.5,
            seed: 0,
            gen_loss: GenLoss::NonSaturating,
        }
    }
}

fn check_optimizer(batch_size: usize, lr: f64, beta1: f64) -> Result<()> {
    if batch_size == 0 {
        return Err(Error::contract("batch_size must be positive"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::contract(format!("learning rate must be positive, got {lr}")));
    }
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(Error::contract(format!("beta1 must lie in (0, 1), got {beta1}")));
    }
    Ok(())
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        check_optimizer(self.batch_size, self.lr, self.beta1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivGanConfig {
    /// Number of generator/discriminator pairs.
    pub n: usize,
    pub lambda: f64,
    pub epochs: usize,
    /// Privacy-discriminator pre-training epochs on the real partition.
    pub dp_init_epochs: usize,
    /// First epoch (1-based) in which the privacy discriminator trains on fakes.
    pub co_train_delay: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub seed: u64,
    #[serde(default)]
    pub gen_loss: GenLoss,
    #[serde(default)]
    pub privacy_mode: PrivacyMode,
}

impl Default for PrivGanConfig {
    fn default() -> Self {
        Self {
            n: 2,
            lambda: 1.0,
            epochs: 300,
            dp_init_epochs: 50,
            co_train_delay: 100,
            batch_size: 256,
            lr: 2e-4,
            beta1: 0.5,
            seed: 0,
            gen_loss: GenLoss::NonSaturating,
            privacy_mode: PrivacyMode::WrongLabel,
        }
    }
}

impl PrivGanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::contract(format!("privGAN needs N >= 2 pairs, got {}", self.n)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::contract(format!("lambda must be positive, got {}", self.lambda)));
        }
        check_optimizer(self.batch_size, self.lr, self.beta1)
    }

    /// The matching single-pair configuration, for baselines with the same budget.
    pub fn gan_config(&self) -> GanConfig {
        GanConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            beta1: self.beta1,
            seed: self.seed,
            gen_loss: self.gen_loss,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: MlpModel,
    pub discriminator: MlpModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivGanModel {
    pub generators: Vec<MlpModel>,
    pub discriminators: Vec<MlpModel>,
    pub privacy_disc: MlpModel,
    pub config: PrivGanConfig,
    /// Row indices (into the training matrix) each pair was trained on.
    pub partition: Partition,
}

impl PrivGanModel {
    pub fn n(&self) -> usize {
        self.generators.len()
    }

    /// Fraction of rows whose arg-max privacy-discriminator class equals `labels`.
    pub fn privacy_accuracy(&self, x: &Matrix, labels: &[usize]) -> Result<f64> {
        if labels.len() != x.rows() || labels.is_empty() {
            return Err(Error::shape(
                "privacy_accuracy",
                format!("{} labels for {} rows", labels.len(), x.rows()),
            ));
        }
        let probs = self.privacy_disc.predict(x)?;
        let hits = probs
            .iter_rows()
            .zip(labels)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Access to the generator and discriminator stacks of either model family.
pub trait Generative {
    fn generators(&self) -> &[MlpModel];
    fn discriminators(&self) -> &[MlpModel];
}

impl Generative for GanModel {
    fn generators(&self) -> &[MlpModel] {
        std::slice::from_ref(&self.generator)
    }
    fn discriminators(&self) -> &[MlpModel] {
        std::slice::from_ref(&self.discriminator)
    }
}

impl Generative for PrivGanModel {
    fn generators(&self) -> &[MlpModel] {
        &self.generators
    }
    fn discriminators(&self) -> &[MlpModel] {
        &self.discriminators
    }
}

/// Which generator produces each sampled row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum GeneratorPolicy {
    Single(usize),
    RoundRobin,
    Random,
}

/// Draws `count` samples. Noise for every row is drawn first, then the
/// generator index of each row, so a policy change never shifts the noise.
pub fn generate(model: &impl Generative, count: usize, rng: &mut Rng, policy: GeneratorPolicy) -> Result<Matrix> {
    let gens = model.generators();
    if count == 0 {
        return Err(Error::contract("generate: count must be positive"));
    }
    let latent = gens[0].input_dim();
    let z = sample_noise(rng, count, latent)?;
    let owner: Vec<usize> = match policy {
        GeneratorPolicy::Single(i) if i >= gens.len() => {
            return Err(Error::contract(format!(
                "generator index {i} out of range for {} generators",
                gens.len()
            )))
        }
        GeneratorPolicy::Single(i) => vec![i; count],
        GeneratorPolicy::RoundRobin => (0..count).map(|r| r % gens.len()).collect(),
        GeneratorPolicy::Random => (0..count).map(|_| rng.below(gens.len())).collect(),
    };
    let mut out = Matrix::zeros(count, gens[0].output_dim());
    for (g, model) in gens.iter().enumerate() {
        let rows: Vec<usize> = (0..count).filter(|&r| owner[r] == g).collect();
        if rows.is_empty() {
            continue;
        }
        let samples = model.predict(&z.select_rows(&rows))?;
        for (k, &r) in rows.iter().enumerate() {
            out.row_mut(r).copy_from_slice(samples.row(k));
        }
    }
    Ok(out)
}

/// Discriminator scores, one column per discriminator.
pub fn disc_scores(model: &impl Generative, x: &Matrix) -> Result<Matrix> {
    let discs = model.discriminators();
    let mut out = Matrix::zeros(x.rows(), discs.len());
    for (j, d) in discs.iter().enumerate() {
        let s = d.predict(x)?;
        for r in 0..x.rows() {
            out.set(r, j, s.get(r, 0));
        }
    }
    Ok(out)
}

fn mean_log(values: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut total = 0.0;
    for v in values {
        total += v.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP).ln();
        n += 1;
    }
    total / n as f64
}

/// Monte-Carlo estimate of the privGAN value function and its parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueEstimate {
    /// `Σᵢ E_{pᵢ}[log Dᵢ] + E_z[log(1 − Dᵢ(Gᵢ(z)))]`.
    pub utility: f64,
    /// `Σᵢ E_z[log D_pⁱ(Gᵢ(z))]`.
    pub privacy: f64,
    pub lambda: f64,
    /// `utility + λ · privacy`.
    pub total: f64,
}

/// Estimates the value function with `mc_samples` noise draws per generator.
/// `parts[i]` holds the real rows of pair `i`. Probabilities are clamped to
/// `[EPS_CLAMP, 1 − EPS_CLAMP]` before logs.
pub fn privgan_value(
    model: &PrivGanModel,
    parts: &[Matrix],
    rng: &mut Rng,
    mc_samples: usize,
) -> Result<ValueEstimate> {
    if mc_samples == 0 {
        return Err(Error::contract("privgan_value: mc_samples must be positive"));
    }
    if parts.len() != model.n() || parts.iter().any(|p| p.rows() == 0) {
        return Err(Error::shape(
            "privgan_value",
            format!("{} non-empty parts expected, got {}", model.n(), parts.len()),
        ));
    }
    let mut utility = 0.0;
    let mut privacy = 0.0;
    for (i, part) in parts.iter().enumerate() {
        let real = model.discriminators[i].predict(part)?;
        let z = sample_noise(rng, mc_samples, model.generators[i].input_dim())?;
        let fake = model.generators[i].predict(&z)?;
        let d_fake = model.discriminators[i].predict(&fake)?;
        let dp = model.privacy_disc.predict(&fake)?;
        utility += mean_log(real.data().iter().copied()) + mean_log(d_fake.data().iter().map(|d| 1.0 - d));
        privacy += mean_log(dp.iter_rows().map(|row| row[i]));
    }
    let lambda = model.config.lambda;
    Ok(ValueEstimate {
        utility,
        privacy,
        lambda,
        total: utility + lambda * privacy,
    })
}

/// One record per outer epoch; the privacy-discriminator fields are `None` for GANs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub gen_loss: Vec<f64>,
    pub disc_loss: Vec<f64>,
    pub dp_loss: Option<f64>,
    /// Cumulative count of privacy-discriminator updates on generated data.
    pub dp_fake_updates: Option<u64>,
    /// Excluded from serialization so checkpoints are reproducible byte for byte.
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Wall time is ignored: two records are equal when training produced the same numbers.
impl PartialEq for EpochRecord {
    fn eq(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.gen_loss == other.gen_loss
            && self.disc_loss == other.disc_loss
            && self.dp_loss == other.dp_loss
            && self.dp_fake_updates == other.dp_fake_updates
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Privacy-discriminator loss per pre-training epoch.
    pub dp_init_loss: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn wall_ms(&self) -> f64 {
        self.epochs.iter().map(|e| e.wall_ms).sum()
    }
}
