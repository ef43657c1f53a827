//! Utility-side measurements: classifiers trained on real or synthetic data,
//! predictive entropy, class diversity and discriminator score histograms.

use serde::{Deserialize, Serialize};

use crate::attacks::{histogram, Histogram};
use crate::data::{Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::models::{argmax, disc_scores, generate, softmax_epoch, Generative, GeneratorPolicy};
use crate::numkit::{Activation, AdamConfig, AdamState, Matrix, MlpModel, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            epochs: 60,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
        }
    }
}

fn labels_of(dataset: &Dataset) -> Result<&[usize]> {
    dataset
        .labels()
        .ok_or_else(|| Error::contract(format!("dataset `{}` has no labels", dataset.name())))
}

/// MLP classifier `dim → hidden… → C` (LeakyReLU, softmax) trained with
/// Adam on cross-entropy. `C` is `num_classes` when given, otherwise one more
/// than the largest label. Returns the model and its training accuracy.
pub fn train_classifier(
    dataset: &Dataset,
    num_classes: Option<usize>,
    config: &ClassifierConfig,
) -> Result<(MlpModel, f64)> {
    let labels = labels_of(dataset)?;
    if dataset.is_empty() || config.batch_size == 0 {
        return Err(Error::contract(
            "classifier needs a non-empty dataset and a positive batch size",
        ));
    }
    let classes = num_classes.unwrap_or_else(|| dataset.num_classes());
    if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::contract(format!("label {l} outside {classes} classes")));
    }
    let root = Rng::new(config.seed);
    let mut dims = vec![dataset.dim()];
    dims.extend_from_slice(&config.hidden);
    dims.push(classes);
    let mut acts = vec![Activation::leaky(); config.hidden.len()];
    acts.push(Activation::Softmax);
    let mut model = MlpModel::new(&dims, &acts, &mut root.substream("init"))?;
    let adam = AdamConfig {
        lr: config.lr,
        beta1: 0.9,
        ..AdamConfig::default()
    };
    let mut opt = AdamState::for_model(adam, &model)?;
    for e in 1..=config.epochs {
        softmax_epoch(
            &mut model,
            &mut opt,
            dataset.features(),
            labels,
            config.batch_size,
            &mut root.substream(&format!("epoch{e}")),
            e,
            "classifier",
        )?;
    }
    let acc = accuracy(&model, dataset)?;
    Ok((model, acc))
}

/// Fraction of rows whose arg-max class (ties to the lowest index) matches the label.
pub fn accuracy(classifier: &MlpModel, dataset: &Dataset) -> Result<f64> {
    let labels = labels_of(dataset)?;
    if dataset.is_empty() {
        return Err(Error::contract("accuracy of an empty dataset"));
    }
    let probs = classifier.predict(dataset.features())?;
    let hits = probs.iter_rows().zip(labels).filter(|(r, &l)| argmax(r) == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Labeled synthetic data: `counts[c]` rows from `models[c]`, each row from a
/// uniformly chosen generator of that model.
pub fn synthetic_trainset<M: Generative>(models: &[M], counts: &[usize], rng: &Rng) -> Result<Dataset> {
    if models.len() != counts.len() || models.is_empty() {
        return Err(Error::contract(format!(
            "{} per-class models for {} class counts",
            models.len(),
            counts.len()
        )));
    }
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for (c, (m, &k)) in models.iter().zip(counts).enumerate() {
        if k == 0 {
            continue;
        }
        parts.push(generate(
            m,
            k,
            &mut rng.substream(&format!("class{c}")),
            GeneratorPolicy::Random,
        )?);
        labels.extend(std::iter::repeat_n(c, k));
    }
    let refs: Vec<&Matrix> = parts.iter().collect();
    Dataset::new("synthetic", Matrix::vstack(&refs)?, Some(labels))
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    -p.filter(|&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

fn predictions(classifier: &MlpModel, samples: &Matrix) -> Result<Matrix> {
    if samples.rows() == 0 {
        return Err(Error::contract("empty sample set"));
    }
    classifier.predict(samples)
}

/// Mean over samples of the entropy of the predicted class distribution.
pub fn avg_entropy(classifier: &MlpModel, samples: &Matrix) -> Result<f64> {
    let probs = predictions(classifier, samples)?;
    Ok(probs.iter_rows().map(|r| entropy(r.iter().copied())).sum::<f64>() / probs.rows() as f64)
}

/// Entropy of the histogram of arg-max classes (ties to the lowest index).
pub fn class_diversity(classifier: &MlpModel, samples: &Matrix) -> Result<f64> {
    let probs = predictions(classifier, samples)?;
    let mut counts = vec![0usize; probs.cols()];
    for r in probs.iter_rows() {
        counts[argmax(r)] += 1;
    }
    let n = probs.rows() as f64;
    Ok(entropy(counts.into_iter().map(|c| c as f64 / n)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    /// Discriminator whose scores were binned.
    pub discriminator: usize,
    /// `p` over training rows, `q` over holdout rows.
    pub histogram: Histogram,
}

/// Training versus holdout score histograms from one discriminator, chosen
/// uniformly from the `"histogram-disc"` substream of `rng` when there are several.
pub fn score_histograms(
    model: &impl Generative,
    data: &Matrix,
    split: &SplitPlan,
    bins: usize,
    rng: &Rng,
) -> Result<ScoreHistogram> {
    if bins < 2 {
        return Err(Error::contract(format!("need at least 2 bins, got {bins}")));
    }
    let n = model.discriminators().len();
    let j = rng.substream("histogram-disc").below(n);
    let scores = disc_scores(model, data)?;
    let col = |idx: &[usize]| histogram(idx.iter().map(|&r| scores.get(r, j)), bins);
    Ok(ScoreHistogram {
        discriminator: j,
        histogram: Histogram {
            p: col(&split.train_indices)?,
            q: col(&split.holdout_indices)?,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    /// Real-test accuracy of a classifier trained on synthetic data.
    pub downstream_accuracy: f64,
    /// Predictive entropy of the real-data classifier on synthetic samples.
    pub avg_entropy: f64,
    pub class_diversity: f64,
    /// Real-test accuracy of the same classifier trained on real data.
    pub reference_accuracy_real: f64,
}

/// Trains classifiers on `synthetic` and on `real_train`, scores both on
/// `real_test`, and measures the synthetic samples with the real-data classifier.
pub fn utility_report(
    synthetic: &Dataset,
    real_train: &Dataset,
    real_test: &Dataset,
    config: &ClassifierConfig,
) -> Result<UtilityReport> {
    let classes = real_train.num_classes().max(synthetic.num_classes());
    let (on_synth, _) = train_classifier(synthetic, Some(classes), config)?;
    let (on_real, _) = train_classifier(real_train, Some(classes), config)?;
    Ok(UtilityReport {
        downstream_accuracy: accuracy(&on_synth, real_test)?,
        avg_entropy: avg_entropy(&on_real, synthetic.features())?,
        class_diversity: class_diversity(&on_real, synthetic.features())?,
        reference_accuracy_real: accuracy(&on_real, real_test)?,
    })
}
