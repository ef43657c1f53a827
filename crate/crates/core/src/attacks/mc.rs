use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{pca_fit, pca_project, PcaBasis, SplitPlan};
use crate::error::{Error, Result};
use crate::models::{generate, Generative, GeneratorPolicy};
use crate::numkit::{sq_dist, Matrix, Rng};

/// Neighborhood radius for the set-membership attack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McEpsilon {
    /// Median over all `2m` candidates of the distance to the nearest synthetic sample.
    Median,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McAttackConfig {
    /// Size of each candidate set.
    pub m: usize,
    /// Number of synthetic samples.
    pub n: usize,
    pub pca_k: usize,
    pub epsilon: McEpsilon,
    pub repeats: usize,
}

impl Default for McAttackConfig {
    fn default() -> Self {
        Self {
            m: 20,
            n: 10_000,
            pca_k: 40,
            epsilon: McEpsilon::Median,
            repeats: 10,
        }
    }
}

impl McAttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.repeats == 0 || self.pca_k == 0 {
            return Err(Error::contract(format!(
                "m={}, n={}, pca_k={} and repeats={} must all be positive",
                self.m, self.n, self.pca_k, self.repeats
            )));
        }
        if let McEpsilon::Fixed(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::contract(format!("epsilon must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

fn nearest_distances(candidates: &Matrix, synthetic: &Matrix) -> Vec<f64> {
    (0..candidates.rows())
        .into_par_iter()
        .map(|i| {
            let x = candidates.row(i);
            synthetic
                .iter_rows()
                .map(|g| sq_dist(x, g))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn check_sets(sets: &[&Matrix], basis: &PcaBasis) -> Result<()> {
    for s in sets {
        if s.rows() == 0 {
            return Err(Error::contract("empty sample set"));
        }
        if s.cols() != basis.dim() {
            return Err(Error::shape(
                "set-membership attack",
                format!("{} columns, PCA basis expects {}", s.cols(), basis.dim()),
            ));
        }
    }
    Ok(())
}

fn median_epsilon_projected(candidates: &Matrix, synthetic: &Matrix) -> f64 {
    median(nearest_distances(candidates, synthetic))
}

/// Median heuristic for the neighborhood radius, in PCA space.
pub fn median_epsilon(candidates: &Matrix, synthetic: &Matrix, basis: &PcaBasis) -> Result<f64> {
    check_sets(&[candidates, synthetic], basis)?;
    Ok(median_epsilon_projected(
        &pca_project(basis, candidates)?,
        &pca_project(basis, synthetic)?,
    ))
}

fn neighborhood_count(x: &[f64], synthetic: &Matrix, eps: f64) -> usize {
    let r2 = eps * eps;
    synthetic.iter_rows().filter(|g| sq_dist(x, g) <= r2).count()
}

/// Sum of per-pair votes for `S1` (win 1, exact tie ½, loss 0).
fn votes_for_s1(s1: &Matrix, s0: &Matrix, synthetic: &Matrix, eps: f64) -> f64 {
    (0..s1.rows())
        .into_par_iter()
        .map(|j| {
            let a = neighborhood_count(s1.row(j), synthetic, eps);
            let b = neighborhood_count(s0.row(j), synthetic, eps);
            match a.cmp(&b) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            }
        })
        .sum()
}

fn decide(votes: f64, m: usize, rng: &mut Rng) -> bool {
    let half = m as f64 / 2.0;
    if votes > half {
        true
    } else if votes < half {
        false
    } else {
        rng.bernoulli_half()
    }
}

/// Decides which of two equal-size candidate sets was used for training
/// (`true` = `s1`). For each pair `(s1[j], s0[j])` the candidate with more
/// synthetic samples inside its `eps`-ball (Euclidean, PCA space) gets the
/// vote; equal counts split the vote. A tied total is settled by a fair coin.
pub fn mc_set_attack(
    s1: &Matrix,
    s0: &Matrix,
    synthetic: &Matrix,
    basis: &PcaBasis,
    eps: f64,
    rng: &mut Rng,
) -> Result<bool> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::contract(format!("epsilon must be positive, got {eps}")));
    }
    check_sets(&[s1, s0, synthetic], basis)?;
    if s1.rows() != s0.rows() {
        return Err(Error::shape(
            "mc_set_attack",
            format!("candidate sets of size {} and {}", s1.rows(), s0.rows()),
        ));
    }
    let synth = pca_project(basis, synthetic)?;
    let votes = votes_for_s1(&pca_project(basis, s1)?, &pca_project(basis, s0)?, &synth, eps);
    Ok(decide(votes, s1.rows(), rng))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRepeat {
    pub epsilon: f64,
    pub votes_for_train: f64,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub accuracy: f64,
    /// Number of principal components actually used.
    pub pca_k: usize,
    pub repeats: Vec<McRepeat>,
}

fn choose(pool: &[usize], m: usize, rng: &mut Rng) -> Vec<usize> {
    let mut idx = pool.to_vec();
    rng.shuffle(&mut idx);
    idx.truncate(m);
    idx
}

/// Repeated set-membership attacks against a fixed synthetic sample.
///
/// The PCA basis is fit on the holdout rows with
/// `min(pca_k, dim, |holdout|)` components. Each repeat draws `m` training
/// and `m` holdout rows without replacement; a repeat is correct when the
/// training set is picked.
pub fn mc_set_accuracy_from_samples(
    synthetic: &Matrix,
    data: &Matrix,
    split: &SplitPlan,
    config: &McAttackConfig,
    rng: &Rng,
) -> Result<McResult> {
    config.validate()?;
    if split.total() != data.rows() {
        return Err(Error::shape(
            "mc_set_accuracy",
            format!("split covers {} rows, data has {}", split.total(), data.rows()),
        ));
    }
    if config.m > split.train_indices.len() || config.m > split.holdout_indices.len() {
        return Err(Error::contract(format!(
            "set size m={} exceeds the training ({}) or holdout ({}) pool",
            config.m,
            split.train_indices.len(),
            split.holdout_indices.len()
        )));
    }
    let holdout = data.select_rows(&split.holdout_indices);
    let k = config.pca_k.min(data.cols()).min(holdout.rows());
    let basis = pca_fit(&holdout, k)?;
    let synth = pca_project(&basis, synthetic)?;
    let mut repeats = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let mut rr = rng.substream(&format!("repeat{r}"));
        let s1 = pca_project(
            &basis,
            &data.select_rows(&choose(&split.train_indices, config.m, &mut rr)),
        )?;
        let s0 = pca_project(
            &basis,
            &data.select_rows(&choose(&split.holdout_indices, config.m, &mut rr)),
        )?;
        let epsilon = match config.epsilon {
            McEpsilon::Fixed(e) => e,
            McEpsilon::Median => median_epsilon_projected(&Matrix::vstack(&[&s1, &s0])?, &synth),
        };
        let votes = votes_for_s1(&s1, &s0, &synth, epsilon);
        repeats.push(McRepeat {
            epsilon,
            votes_for_train: votes,
            correct: decide(votes, config.m, &mut rr),
        });
    }
    let accuracy = repeats.iter().filter(|r| r.correct).count() as f64 / repeats.len() as f64;
    Ok(McResult {
        accuracy,
        pca_k: k,
        repeats,
    })
}

/// Draws `config.n` samples from `model`, each from a uniformly chosen
/// generator, then runs [`mc_set_accuracy_from_samples`].
pub fn mc_set_accuracy(
    model: &impl Generative,
    data: &Matrix,
    split: &SplitPlan,
    config: &McAttackConfig,
    rng: &Rng,
) -> Result<McResult> {
    config.validate()?;
    let synthetic = generate(
        model,
        config.n,
        &mut rng.substream("synthetic"),
        GeneratorPolicy::Random,
    )?;
    mc_set_accuracy_from_samples(&synthetic, data, split, config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split;

    fn identity_basis(d: usize) -> PcaBasis {
        PcaBasis {
            mean: Matrix::zeros(1, d),
            components: Matrix::identity(d),
        }
    }

    #[test]
    fn median_examples() {
        let b = identity_basis(1);
        let c = Matrix::from_rows(&[[1.0], [2.0], [3.0], [10.0]]).unwrap();
        let eps = median_epsilon(&c, &Matrix::from_rows(&[[0.0]]).unwrap(), &b).unwrap();
        assert!((eps - 2.5).abs() < 1e-15);
        assert_eq!(median_epsilon(&c, &c, &b).unwrap(), 0.0);
        let one = Matrix::from_rows(&[[3.0]]).unwrap();
        assert_eq!(
            median_epsilon(&one, &Matrix::from_rows(&[[0.0]]).unwrap(), &b).unwrap(),
            3.0
        );
        assert!(median_epsilon(&Matrix::zeros(0, 1), &one, &b).is_err());
    }

    #[test]
    fn piled_synthetic_picks_s1() {
        let b = identity_basis(2);
        let s1 = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s0 = Matrix::from_rows(&[[5.0, 5.0], [6.0, 5.0], [5.0, 6.0]]).unwrap();
        let synth = Matrix::vstack(&[&s1, &s1]).unwrap();
        assert!(mc_set_attack(&s1, &s0, &synth, &b, 0.5, &mut Rng::new(0)).unwrap());
        assert!(!mc_set_attack(&s0, &s1, &synth, &b, 0.5, &mut Rng::new(0)).unwrap());
        assert!(mc_set_attack(&s1, &s0, &synth, &b, 0.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn identical_sets_are_a_coin_flip() {
        let b = identity_basis(2);
        let s = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let synth = Matrix::from_rows(&[[0.1, 0.0], [3.0, 3.0]]).unwrap();
        let mut rng = Rng::new(11);
        let ones = (0..1000)
            .filter(|_| mc_set_attack(&s, &s, &synth, &b, 0.5, &mut rng).unwrap())
            .count();
        assert!((450..=550).contains(&ones), "{ones}");
    }

    #[test]
    fn memorized_training_set_is_found() {
        let n = 60;
        let data = Matrix::from_vec(n, 2, (0..2 * n).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect()).unwrap();
        let plan = split(n, 0.5, 4).unwrap();
        let synth = data.select_rows(&plan.train_indices);
        let cfg = McAttackConfig {
            m: 10,
            ..McAttackConfig::default()
        };
        let r = mc_set_accuracy_from_samples(&synth, &data, &plan, &cfg, &Rng::new(1)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.pca_k, 2);
        let again = mc_set_accuracy_from_samples(&synth, &data, &plan, &cfg, &Rng::new(1)).unwrap();
        assert_eq!(r, again);
        let big = McAttackConfig {
            m: 31,
            ..McAttackConfig::default()
        };
        assert!(mc_set_accuracy_from_samples(&synth, &data, &plan, &big, &Rng::new(1)).is_err());
    }
}
