use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vector over a finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub const SUM_TOL: f64 = 1e-12;

    /// Requires non-negative entries summing to 1 within [`Self::SUM_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("empty distribution"));
        }
        if let Some(v) = probs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::contract(format!("invalid probability {v}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::contract(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract(format!("cannot normalize weights {weights:?}")));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        Ok(Self { probs })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            probs: vec![1.0 / m as f64; m],
        }
    }

    /// Skips validation; used by optimizers that keep iterates on the simplex.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Entry-wise average of several distributions.
    pub fn mixture(dists: &[DiscreteDist]) -> Result<Self> {
        let m = same_support(dists)?;
        let n = dists.len() as f64;
        let probs = (0..m)
            .map(|k| dists.iter().map(|d| d.probs[k]).sum::<f64>() / n)
            .collect();
        Ok(Self { probs })
    }
}

pub(crate) fn same_support(dists: &[DiscreteDist]) -> Result<usize> {
    let m = dists
        .first()
        .map(DiscreteDist::len)
        .ok_or_else(|| Error::contract("no distributions given"))?;
    if let Some(d) = dists.iter().find(|d| d.len() != m) {
        return Err(Error::shape(
            "support",
            format!("distributions of length {} and {m}", d.len()),
        ));
    }
    Ok(m)
}

/// `KL(p‖q)` in nats, with `0·log 0 = 0`; `+∞` when `q` misses mass of `p`.
pub fn kl(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("kl", format!("lengths {} and {}", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Generalized Jensen–Shannon divergence `(1/N) Σ KL(pᵢ ‖ mean)`, in `[0, log N]`.
pub fn jsd_n(dists: &[DiscreteDist]) -> Result<f64> {
    let mean = DiscreteDist::mixture(dists)?;
    let mut total = 0.0;
    for d in dists {
        total += kl(d, &mean)?;
    }
    Ok(total / dists.len() as f64)
}

/// Two-distribution Jensen–Shannon divergence.
pub fn jsd(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    jsd_n(&[p.clone(), q.clone()])
}

/// Total variation distance `½ Σ |pᵢ − qᵢ|`.
pub fn tvd(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("tvd", format!("lengths {} and {}", p.len(), q.len())));
    }
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
