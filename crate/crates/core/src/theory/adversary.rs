//! Best membership-inference decision rule given the score distributions on
//! training (`P`) and holdout (`Q`) data and the training fraction `f`.

use serde::Serialize;

use super::divergence::DiscreteDist;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarySetup {
    pub p: DiscreteDist,
    pub q: DiscreteDist,
    pub f: f64,
}

impl AdversarySetup {
    pub fn new(p: DiscreteDist, q: DiscreteDist, f: f64) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::shape(
                "AdversarySetup",
                format!("P has {} outcomes, Q {}", p.len(), q.len()),
            ));
        }
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::contract(format!("f = {f} outside (0, 1)")));
        }
        Ok(Self { p, q, f })
    }

    /// Weighted masses `(pᵢ f, qᵢ (1 − f))`.
    fn masses(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p
            .probs()
            .iter()
            .zip(self.q.probs())
            .map(move |(&p, &q)| (p * self.f, q * (1.0 - self.f)))
    }

    /// Expected utility `E[Δ]` of an arbitrary decision vector.
    pub fn payoff(&self, delta: &[bool]) -> f64 {
        self.masses()
            .zip(delta)
            .map(|((train, ho), &d)| {
                // train = λᵢ sᵢ, ho = (1 − λᵢ) sᵢ
                let (d, nd) = if d { (1.0, 0.0) } else { (0.0, 1.0) };
                train * d + ho * nd - ho * d - train * nd
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversaryDecision {
    /// `true` = classify outcome `i` as a training sample.
    pub delta: Vec<bool>,
    pub expected_payoff: f64,
    /// `sᵢ = pᵢ f + qᵢ (1 − f)`.
    pub s: Vec<f64>,
    /// `λᵢ = pᵢ f / sᵢ`; `None` where `sᵢ = 0`.
    pub posterior: Vec<Option<f64>>,
}

/// Closed form: `δᵢ = [pᵢ f ≥ qᵢ (1 − f)]`, payoff `Σ |pᵢ f − qᵢ (1 − f)|`.
pub fn optimal_adversary(setup: &AdversarySetup) -> AdversaryDecision {
    let mut delta = Vec::with_capacity(setup.p.len());
    let mut s = Vec::with_capacity(setup.p.len());
    let mut posterior = Vec::with_capacity(setup.p.len());
    let mut payoff = 0.0;
    for (train, ho) in setup.masses() {
        delta.push(train >= ho);
        payoff += (train - ho).abs();
        s.push(train + ho);
        posterior.push((train + ho > 0.0).then(|| train / (train + ho)));
    }
    AdversaryDecision {
        delta,
        expected_payoff: payoff,
        s,
        posterior,
    }
}

pub const BRUTE_FORCE_MAX_OUTCOMES: usize = 20;

/// Exhaustive search over all `2^M` decision vectors; first maximizer wins.
pub fn brute_force_adversary(setup: &AdversarySetup) -> Result<AdversaryDecision> {
    let m = setup.p.len();
    if m > BRUTE_FORCE_MAX_OUTCOMES {
        return Err(Error::contract(format!(
            "brute force over 2^{m} decisions exceeds the limit of M <= {BRUTE_FORCE_MAX_OUTCOMES}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_mask = 0u32;
    let mut delta = vec![false; m];
    for mask in 0u32..(1u32 << m) {
        for (i, d) in delta.iter_mut().enumerate() {
            *d = mask >> i & 1 == 1;
        }
        let v = setup.payoff(&delta);
        if v > best {
            best = v;
            best_mask = mask;
        }
    }
    let closed = optimal_adversary(setup);
    Ok(AdversaryDecision {
        delta: (0..m).map(|i| best_mask >> i & 1 == 1).collect(),
        expected_payoff: best,
        s: closed.s,
        posterior: closed.posterior,
    })
}
