//! Membership-inference attacks: white-box ranking by discriminator score,
//! binned total-variation attacks on score distributions, and the
//! Monte-Carlo set-membership attack on generated samples.

mod mc;

pub use mc::{
    mc_set_accuracy, mc_set_accuracy_from_samples, mc_set_attack, median_epsilon, McAttackConfig, McEpsilon, McRepeat,
    McResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Row aggregation of per-discriminator scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Max,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhiteBoxResult {
    pub scores: Vec<f64>,
    /// Indices of the top `round(f · n)` scores, best first.
    pub predicted: Vec<usize>,
    pub accuracy: f64,
}

/// Ranks rows by score (descending, ties by ascending index) and predicts the
/// top `round(f · n)` as training members. `truth` must hold exactly that
/// many positives.
pub fn whitebox_gan(scores: &[f64], f: f64, truth: &[bool]) -> Result<WhiteBoxResult> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::contract(format!("f = {f} outside (0, 1)")));
    }
    if scores.len() != truth.len() || scores.is_empty() {
        return Err(Error::shape(
            "whitebox attack",
            format!("{} scores, {} membership bits", scores.len(), truth.len()),
        ));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::contract(format!("non-finite score {s}")));
    }
    let k = (f * scores.len() as f64).round() as usize;
    let positives = truth.iter().filter(|&&t| t).count();
    if positives != k || k == 0 {
        return Err(Error::contract(format!(
            "membership bits hold {positives} training rows, expected round(f·n) = {k}"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    let hits = order.iter().filter(|&&i| truth[i]).count();
    Ok(WhiteBoxResult {
        scores: scores.to_vec(),
        accuracy: hits as f64 / k as f64,
        predicted: order,
    })
}

/// Per-row aggregate of an `n × N` score matrix.
pub fn aggregate_scores(scores: &Matrix, aggregate: Aggregate) -> Vec<f64> {
    scores
        .iter_rows()
        .map(|row| match aggregate {
            Aggregate::Max => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Mean => row.iter().sum::<f64>() / row.len() as f64,
        })
        .collect()
}

/// White-box attack on several discriminators: aggregate each row, then rank.
pub fn whitebox_privgan(scores: &Matrix, f: f64, truth: &[bool], aggregate: Aggregate) -> Result<WhiteBoxResult> {
    if scores.cols() == 0 {
        return Err(Error::shape("whitebox attack", "score matrix has no columns"));
    }
    whitebox_gan(&aggregate_scores(scores, aggregate), f, truth)
}

pub const DEFAULT_TVD_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Histogram {
    /// `bin_lo,bin_hi,p,q` rows over equal-width bins on `[0, 1]`.
    pub fn to_csv(&self) -> String {
        let m = self.p.len();
        let mut out = String::from("bin_lo,bin_hi,p,q\n");
        for b in 0..m {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?}\n",
                b as f64 / m as f64,
                (b + 1) as f64 / m as f64,
                self.p[b],
                self.q[b]
            ));
        }
        out
    }

    pub fn tvd(&self) -> f64 {
        0.5 * self.p.iter().zip(&self.q).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvdResult {
    /// One histogram pair per discriminator column.
    pub histograms: Vec<Histogram>,
    pub per_disc: Vec<f64>,
    /// `max_j TVD(P_j, Q_j)`.
    pub score: f64,
}

/// Normalized histogram over `bins` equal-width bins on `[0, 1]`; the last bin
/// is closed on the right.
pub fn histogram(scores: impl Iterator<Item = f64>, bins: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; bins];
    let mut n = 0usize;
    for s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::contract(format!("score {s} outside [0, 1]")));
        }
        counts[((s * bins as f64) as usize).min(bins - 1)] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::contract("empty score set"));
    }
    Ok(counts.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// Binned TVD attack. Column `j` of each matrix holds discriminator `j`'s
/// scores; the result is the largest per-column TVD.
pub fn tvd_attack(train: &Matrix, holdout: &Matrix, bins: usize) -> Result<TvdResult> {
    if bins < 2 {
        return Err(Error::contract(format!("need at least 2 bins, got {bins}")));
    }
    if train.cols() != holdout.cols() || train.cols() == 0 {
        return Err(Error::shape(
            "tvd_attack",
            format!("{} vs {} discriminator columns", train.cols(), holdout.cols()),
        ));
    }
    let mut histograms = Vec::with_capacity(train.cols());
    let mut per_disc = Vec::with_capacity(train.cols());
    for j in 0..train.cols() {
        let h = Histogram {
            p: histogram(train.iter_rows().map(|r| r[j]), bins)?,
            q: histogram(holdout.iter_rows().map(|r| r[j]), bins)?,
        };
        per_disc.push(h.tvd());
        histograms.push(h);
    }
    let score = per_disc.iter().copied().fold(0.0, f64::max);
    Ok(TvdResult {
        histograms,
        per_disc,
        score,
    })
}
