//! Datasets, toy generators, train/holdout splits, equal partitions and PCA.

mod io;
mod pca;

pub use io::{encode_idx, load_csv, load_idx, parse_csv, parse_idx, to_csv, write_csv};
pub use pca::{pca_fit, pca_project, PcaBasis};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

/// Feature matrix with values in `[-1, 1]` and optional integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::shape(
                    "Dataset::new",
                    format!("{} labels for {} rows", l.len(), features.rows()),
                ));
            }
        }
        if let Some(v) = features.data().iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::contract(format!("feature value {v} outside [-1, 1]")));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    /// The bundled 8×8 grayscale digits: 1797 rows, 64 features, 10 classes.
    pub fn digits() -> Self {
        parse_csv("digits8x8", include_str!("../../data/digits8x8.csv")).expect("bundled digits CSV is well-formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Row indices carrying `class`.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .as_ref()
            .map(|l| (0..l.len()).filter(|&i| l[i] == class).collect())
            .unwrap_or_default()
    }
}

/// `k` points evenly spaced on a circle of `radius`.
pub fn ring_centers(k: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..k)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

/// Isotropic Gaussian mixture in 2-D. Row `i` belongs to center `i % k`;
/// coordinates are clamped to `[-1, 1]`.
pub fn make_mixture(rng: &mut Rng, n: usize, centers: &[[f64; 2]], sigma: f64) -> Result<Dataset> {
    if centers.is_empty() {
        return Err(Error::contract("make_mixture needs at least one center"));
    }
    if n == 0 || !(sigma >= 0.0) {
        return Err(Error::contract(format!("make_mixture: n={n}, sigma={sigma}")));
    }
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers.len();
        for &mu in &centers[c] {
            data.push((mu + sigma * rng.normal()).clamp(-1.0, 1.0));
        }
        labels.push(c);
    }
    Dataset::new("mixture", Matrix::from_vec(n, 2, data)?, Some(labels))
}

/// Disjoint train/holdout index sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub seed: u64,
    /// Sorted ascending.
    pub train_indices: Vec<usize>,
    /// Sorted ascending.
    pub holdout_indices: Vec<usize>,
}

impl SplitPlan {
    pub fn total(&self) -> usize {
        self.train_indices.len() + self.holdout_indices.len()
    }

    /// Per-row membership bits (`true` = training row).
    pub fn membership(&self) -> Vec<bool> {
        let mut bits = vec![false; self.total()];
        for &i in &self.train_indices {
            bits[i] = true;
        }
        bits
    }
}

/// Random split with `round(f · n)` training rows.
pub fn split(n_rows: usize, f: f64, seed: u64) -> Result<SplitPlan> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::contract(format!("train fraction {f} outside (0, 1)")));
    }
    let n_train = (f * n_rows as f64).round() as usize;
    if n_train == 0 || n_train >= n_rows {
        return Err(Error::contract(format!(
            "split of {n_rows} rows at f={f} leaves an empty side"
        )));
    }
    let perm = Rng::new(seed).substream("split").permutation(n_rows);
    let mut train_indices = perm[..n_train].to_vec();
    let mut holdout_indices = perm[n_train..].to_vec();
    train_indices.sort_unstable();
    holdout_indices.sort_unstable();
    Ok(SplitPlan {
        train_fraction: f,
        seed,
        train_indices,
        holdout_indices,
    })
}

/// `N` equal-size disjoint index lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub parts: Vec<Vec<usize>>,
    /// The `|train| mod N` indices left out so parts are exactly equal.
    pub dropped: Vec<usize>,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.parts.len()
    }

    pub fn part_size(&self) -> usize {
        self.parts.first().map_or(0, Vec::len)
    }
}

/// Shuffles `indices` and deals them into `n` equal parts, dropping the
/// trailing remainder. Each part must hold at least `batch_floor` indices,
/// i.e. `n` must lie in `[2, |train| / batch_size]`.
pub fn partition(indices: &[usize], n: usize, seed: u64, batch_floor: usize) -> Result<Partition> {
    if n < 2 {
        return Err(Error::contract(format!("partition needs N >= 2, got {n}")));
    }
    let size = indices.len() / n;
    if size == 0 || size < batch_floor {
        return Err(Error::contract(format!(
            "N={n} parts of {} samples give {size} per part, fewer than one batch of {batch_floor}; \
             N lies in a bounded range [2, |X_train| / batch_size] = [2, {}]",
            indices.len(),
            indices.len() / batch_floor.max(1)
        )));
    }
    let mut shuffled = indices.to_vec();
    Rng::new(seed).substream("partition").shuffle(&mut shuffled);
    let dropped = shuffled.split_off(size * n);
    let parts = shuffled.chunks_exact(size).map(<[usize]>::to_vec).collect();
    Ok(Partition { parts, dropped })
}
