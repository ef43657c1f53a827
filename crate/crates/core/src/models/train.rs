use std::time::Instant;

use super::{
    ArchSpec, EpochRecord, GanConfig, GanModel, GenLoss, PrivGanConfig, PrivGanModel, PrivacyMode, TrainTrace,
};
use crate::data::partition;
use crate::error::{Error, Result};
use crate::numkit::{
    adam_step, bce_loss, categorical_ce_loss, sample_noise, AdamConfig, AdamState, Matrix, MlpModel, Rng,
};

const LOSS_LIMIT: f64 = 1e6;

fn guard(loss: f64, epoch: usize, component: &str) -> Result<f64> {
    if loss.is_finite() && loss.abs() <= LOSS_LIMIT {
        Ok(loss)
    } else {
        Err(Error::Diverged {
            epoch,
            component: component.to_string(),
            loss,
        })
    }
}

fn adam_config(lr: f64, beta1: f64) -> AdamConfig {
    AdamConfig {
        lr,
        beta1,
        ..AdamConfig::default()
    }
}

fn check_data(data: &Matrix, arch: &ArchSpec) -> Result<()> {
    arch.validate()?;
    if data.rows() == 0 {
        return Err(Error::contract("training data is empty"));
    }
    if data.cols() != arch.data_dim {
        return Err(Error::shape(
            "training data",
            format!("{} columns, architecture expects {}", data.cols(), arch.data_dim),
        ));
    }
    Ok(())
}

/// One pass of a sigmoid discriminator over `real ∪ fake` in shuffled batches
/// (targets 1 and 0). Returns the mean batch loss.
fn disc_epoch(
    d: &mut MlpModel,
    opt: &mut AdamState,
    real: &Matrix,
    fake: &Matrix,
    batch_size: usize,
    rng: &mut Rng,
    epoch: usize,
    component: &str,
) -> Result<f64> {
    let x = Matrix::vstack(&[real, fake])?;
    let y: Vec<f64> = (0..x.rows()).map(|r| if r < real.rows() { 1.0 } else { 0.0 }).collect();
    let order = rng.permutation(x.rows());
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(batch_size) {
        let xb = x.select_rows(chunk);
        let yb = Matrix::from_vec(chunk.len(), 1, chunk.iter().map(|&r| y[r]).collect())?;
        let (pred, cache) = d.forward(&xb)?;
        let loss = bce_loss(&pred, &yb)?;
        total += guard(loss.value, epoch, component)?;
        batches += 1;
        let grads = d.backward_logits(&cache, &loss.grad_logits)?;
        adam_step(d, &grads, opt)?;
    }
    Ok(total / batches as f64)
}

/// One pass of a softmax classifier over `(x, labels)` in shuffled batches.
pub(crate) fn softmax_epoch(
    model: &mut MlpModel,
    opt: &mut AdamState,
    x: &Matrix,
    labels: &[usize],
    batch_size: usize,
    rng: &mut Rng,
    epoch: usize,
    component: &str,
) -> Result<f64> {
    let order = rng.permutation(x.rows());
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(batch_size) {
        let xb = x.select_rows(chunk);
        let yb: Vec<usize> = chunk.iter().map(|&r| labels[r]).collect();
        let (pred, cache) = model.forward(&xb)?;
        let loss = categorical_ce_loss(&pred, &yb)?;
        total += guard(loss.value, epoch, component)?;
        batches += 1;
        let grads = model.backward_logits(&cache, &loss.grad_logits)?;
        adam_step(model, &grads, opt)?;
    }
    Ok(total / batches as f64)
}

/// Generator loss against a frozen discriminator and its gradient with
/// respect to the generated samples.
fn adversarial_grad(d: &MlpModel, fake: &Matrix, form: GenLoss) -> Result<(f64, Matrix)> {
    let (pred, cache) = d.forward(fake)?;
    let loss = match form {
        GenLoss::NonSaturating => bce_loss(&pred, &Matrix::filled(pred.rows(), 1, 1.0))?,
        GenLoss::Saturating => bce_loss(&pred, &Matrix::zeros(pred.rows(), 1))?.scaled(-1.0),
    };
    let grads = d.backward_logits(&cache, &loss.grad_logits)?;
    Ok((loss.value, grads.input))
}

/// Privacy term of generator `own` against a frozen privacy discriminator.
fn privacy_grad(dp: &MlpModel, fake: &Matrix, own: usize, wrong: &[usize], mode: PrivacyMode) -> Result<(f64, Matrix)> {
    let (pred, cache) = dp.forward(fake)?;
    let loss = match mode {
        PrivacyMode::WrongLabel => categorical_ce_loss(&pred, wrong)?,
        PrivacyMode::Direct => categorical_ce_loss(&pred, &vec![own; pred.rows()])?.scaled(-1.0),
    };
    let grads = dp.backward_logits(&cache, &loss.grad_logits)?;
    Ok((loss.value, grads.input))
}

/// Step-by-step baseline GAN training. Each outer epoch draws `|X|` noise
/// rows, trains the discriminator for one epoch on real plus generated rows,
/// then trains the generator for one epoch over the same noise.
pub struct GanTrainer<'a> {
    data: &'a Matrix,
    config: GanConfig,
    model: GanModel,
    opt_g: AdamState,
    opt_d: AdamState,
    root: Rng,
    epoch: usize,
    trace: TrainTrace,
}

impl<'a> GanTrainer<'a> {
    pub fn new(data: &'a Matrix, arch: &ArchSpec, config: &GanConfig) -> Result<Self> {
        config.validate()?;
        check_data(data, arch)?;
        let root = Rng::new(config.seed);
        let mut init = root.substream("init");
        let generator = arch.generator(&mut init)?;
        let discriminator = arch.discriminator(&mut init)?;
        let adam = adam_config(config.lr, config.beta1);
        Ok(Self {
            data,
            config: config.clone(),
            opt_g: AdamState::for_model(adam, &generator)?,
            opt_d: AdamState::for_model(adam, &discriminator)?,
            model: GanModel {
                generator,
                discriminator,
            },
            root,
            epoch: 0,
            trace: TrainTrace::default(),
        })
    }

    pub fn model(&self) -> &GanModel {
        &self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn run_epoch(&mut self) -> Result<&EpochRecord> {
        let start = Instant::now();
        let e = self.epoch + 1;
        let mut rng = self.root.substream(&format!("epoch{e}"));
        let z = sample_noise(&mut rng, self.data.rows(), self.model.generator.input_dim())?;
        let fake = self.model.generator.predict(&z)?;
        let d_loss = disc_epoch(
            &mut self.model.discriminator,
            &mut self.opt_d,
            self.data,
            &fake,
            self.config.batch_size,
            &mut rng.substream("disc"),
            e,
            "discriminator",
        )?;
        let mut order_rng = rng.substream("gen");
        let order = order_rng.permutation(z.rows());
        let mut g_total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(self.config.batch_size) {
            let (x, cache) = self.model.generator.forward(&z.select_rows(chunk))?;
            let (loss, dx) = adversarial_grad(&self.model.discriminator, &x, self.config.gen_loss)?;
            g_total += guard(loss, e, "generator")?;
            batches += 1;
            let grads = self.model.generator.backward(&cache, &dx)?;
            adam_step(&mut self.model.generator, &grads, &mut self.opt_g)?;
        }
        self.epoch = e;
        self.trace.epochs.push(EpochRecord {
            epoch: e,
            gen_loss: vec![g_total / batches as f64],
            disc_loss: vec![d_loss],
            dp_loss: None,
            dp_fake_updates: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(self.trace.epochs.last().unwrap())
    }

    pub fn finish(self) -> (GanModel, TrainTrace) {
        (self.model, self.trace)
    }
}

/// Trains a baseline GAN for `config.epochs` epochs.
pub fn train_gan(data: &Matrix, arch: &ArchSpec, config: &GanConfig) -> Result<(GanModel, TrainTrace)> {
    let mut t = GanTrainer::new(data, arch, config)?;
    for _ in 0..config.epochs {
        t.run_epoch()?;
    }
    Ok(t.finish())
}

/// Step-by-step privGAN training.
///
/// The training rows are split into `N` equal parts. The privacy
/// discriminator first learns the part labels of the real rows for
/// `dp_init_epochs` epochs. Each outer epoch `e` (1-based) then
/// 1. draws `|X_j|` noise rows per generator and the fakes `X_j^f`,
/// 2. trains each `D_j` for one epoch on `X_j ∪ X_j^f`, in ascending `j`,
/// 3. if `e ≥ co_train_delay`, trains `D_p` for one epoch on all fakes
///    labeled with their generator index,
/// 4. trains every `G_j` for one epoch over its noise with the adversarial
///    loss plus `λ` times the privacy term.
pub struct PrivGanTrainer {
    config: PrivGanConfig,
    model: PrivGanModel,
    parts: Vec<Matrix>,
    opt_g: Vec<AdamState>,
    opt_d: Vec<AdamState>,
    opt_dp: AdamState,
    root: Rng,
    epoch: usize,
    dp_fake_updates: u64,
    pretrained: bool,
    trace: TrainTrace,
}

/// Generated rows of one epoch, kept so the generator step reuses them.
struct EpochSamples {
    noise: Vec<Matrix>,
    fakes: Vec<Matrix>,
    wrong: Vec<Vec<usize>>,
}

impl PrivGanTrainer {
    pub fn new(data: &Matrix, arch: &ArchSpec, config: &PrivGanConfig) -> Result<Self> {
        config.validate()?;
        check_data(data, arch)?;
        let n = config.n;
        let all: Vec<usize> = (0..data.rows()).collect();
        let partition = partition(&all, n, config.seed, config.batch_size)?;
        let parts: Vec<Matrix> = partition.parts.iter().map(|p| data.select_rows(p)).collect();
        let root = Rng::new(config.seed);
        let mut init = root.substream("init");
        let mut generators = Vec::with_capacity(n);
        let mut discriminators = Vec::with_capacity(n);
        for _ in 0..n {
            generators.push(arch.generator(&mut init)?);
            discriminators.push(arch.discriminator(&mut init)?);
        }
        let privacy_disc = arch.privacy_discriminator(n, &mut init)?;
        let adam = adam_config(config.lr, config.beta1);
        Ok(Self {
            opt_g: generators
                .iter()
                .map(|g| AdamState::for_model(adam, g))
                .collect::<Result<_>>()?,
            opt_d: discriminators
                .iter()
                .map(|d| AdamState::for_model(adam, d))
                .collect::<Result<_>>()?,
            opt_dp: AdamState::for_model(adam, &privacy_disc)?,
            model: PrivGanModel {
                generators,
                discriminators,
                privacy_disc,
                config: config.clone(),
                partition,
            },
            config: config.clone(),
            parts,
            root,
            epoch: 0,
            dp_fake_updates: 0,
            pretrained: false,
            trace: TrainTrace::default(),
        })
    }

    pub fn model(&self) -> &PrivGanModel {
        &self.model
    }

    pub fn parts(&self) -> &[Matrix] {
        &self.parts
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Number of privacy-discriminator updates made on generated data so far.
    pub fn dp_fake_updates(&self) -> u64 {
        self.dp_fake_updates
    }

    /// Runs the `dp_init_epochs` pre-training epochs. Idempotent; also
    /// invoked by the first [`Self::run_epoch`].
    pub fn pretrain_privacy_disc(&mut self) -> Result<()> {
        if self.pretrained {
            return Ok(());
        }
        self.pretrained = true;
        let refs: Vec<&Matrix> = self.parts.iter().collect();
        let x = Matrix::vstack(&refs)?;
        let labels: Vec<usize> = (0..self.config.n)
            .flat_map(|j| std::iter::repeat_n(j, self.parts[j].rows()))
            .collect();
        for k in 1..=self.config.dp_init_epochs {
            let mut rng = self.root.substream(&format!("dp-init{k}"));
            let loss = softmax_epoch(
                &mut self.model.privacy_disc,
                &mut self.opt_dp,
                &x,
                &labels,
                self.config.batch_size,
                &mut rng,
                0,
                "privacy discriminator pre-training",
            )?;
            self.trace.dp_init_loss.push(loss);
        }
        Ok(())
    }

    fn draw_samples(&self, rng: &Rng) -> Result<EpochSamples> {
        let n = self.config.n;
        let mut out = EpochSamples {
            noise: Vec::with_capacity(n),
            fakes: Vec::with_capacity(n),
            wrong: Vec::with_capacity(n),
        };
        for j in 0..n {
            let mut r = rng.substream(&format!("samples{j}"));
            let z = sample_noise(&mut r, self.parts[j].rows(), self.model.generators[j].input_dim())?;
            out.fakes.push(self.model.generators[j].predict(&z)?);
            out.noise.push(z);
            out.wrong.push(
                (0..self.parts[j].rows())
                    .map(|_| {
                        let k = r.below(n - 1);
                        if k >= j {
                            k + 1
                        } else {
                            k
                        }
                    })
                    .collect(),
            );
        }
        Ok(out)
    }

    pub fn run_epoch(&mut self) -> Result<&EpochRecord> {
        self.pretrain_privacy_disc()?;
        let start = Instant::now();
        let e = self.epoch + 1;
        let n = self.config.n;
        let bs = self.config.batch_size;
        let rng = self.root.substream(&format!("epoch{e}"));
        let samples = self.draw_samples(&rng)?;

        let mut disc_loss = Vec::with_capacity(n);
        for j in 0..n {
            disc_loss.push(disc_epoch(
                &mut self.model.discriminators[j],
                &mut self.opt_d[j],
                &self.parts[j],
                &samples.fakes[j],
                bs,
                &mut rng.substream(&format!("disc{j}")),
                e,
                &format!("discriminator {j}"),
            )?);
        }

        let dp_loss = if e >= self.config.co_train_delay {
            let refs: Vec<&Matrix> = samples.fakes.iter().collect();
            let x = Matrix::vstack(&refs)?;
            let labels: Vec<usize> = (0..n)
                .flat_map(|j| std::iter::repeat_n(j, samples.fakes[j].rows()))
                .collect();
            let loss = softmax_epoch(
                &mut self.model.privacy_disc,
                &mut self.opt_dp,
                &x,
                &labels,
                bs,
                &mut rng.substream("dp"),
                e,
                "privacy discriminator",
            )?;
            self.dp_fake_updates += x.rows().div_ceil(bs) as u64;
            Some(loss)
        } else {
            None
        };

        let mut gen_loss = Vec::with_capacity(n);
        for j in 0..n {
            let order = rng.substream(&format!("gen{j}")).permutation(samples.noise[j].rows());
            let mut total = 0.0;
            let mut batches = 0;
            for chunk in order.chunks(bs) {
                let (x, cache) = self.model.generators[j].forward(&samples.noise[j].select_rows(chunk))?;
                let (adv, mut dx) = adversarial_grad(&self.model.discriminators[j], &x, self.config.gen_loss)?;
                let wrong: Vec<usize> = chunk.iter().map(|&r| samples.wrong[j][r]).collect();
                let (priv_loss, dpx) = privacy_grad(&self.model.privacy_disc, &x, j, &wrong, self.config.privacy_mode)?;
                dx.add_scaled(&dpx, self.config.lambda)?;
                total += guard(adv + self.config.lambda * priv_loss, e, &format!("generator {j}"))?;
                batches += 1;
                let grads = self.model.generators[j].backward(&cache, &dx)?;
                adam_step(&mut self.model.generators[j], &grads, &mut self.opt_g[j])?;
            }
            gen_loss.push(total / batches as f64);
        }

        self.epoch = e;
        self.trace.epochs.push(EpochRecord {
            epoch: e,
            gen_loss,
            disc_loss,
            dp_loss,
            dp_fake_updates: Some(self.dp_fake_updates),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(self.trace.epochs.last().unwrap())
    }

    pub fn finish(self) -> (PrivGanModel, TrainTrace) {
        (self.model, self.trace)
    }
}

/// Trains privGAN for `config.epochs` epochs after privacy-discriminator pre-training.
pub fn train_privgan(data: &Matrix, arch: &ArchSpec, config: &PrivGanConfig) -> Result<(PrivGanModel, TrainTrace)> {
    let mut t = PrivGanTrainer::new(data, arch, config)?;
    t.pretrain_privacy_disc()?;
    for _ in 0..config.epochs {
        t.run_epoch()?;
    }
    Ok(t.finish())
}
