//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`) keyed by
//! 32 bytes. A root stream built from a `u64` seed is keyed with
//! `SHA-256("privgan-lab/rng" || seed_le)`. A labeled substream is keyed with
//! `SHA-256(parent_key || label)`, so a substream depends only on its parent's
//! key and its label, never on how many values the parent already produced.
//! Gaussian draws use `rand_distr::StandardNormal`.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::Matrix;
use crate::error::{Error, Result};

/// Deterministic, splittable PRNG.
#[derive(Clone, Debug)]
pub struct Rng {
    key: [u8; 32],
    inner: ChaCha20Rng,
}

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::from_key(sha256(&[b"privgan-lab/rng", &seed.to_le_bytes()]))
    }

    fn from_key(key: [u8; 32]) -> Self {
        Self {
            key,
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// Independent stream derived from this stream's key and `label`.
    pub fn substream(&self, label: &str) -> Rng {
        Self::from_key(sha256(&[&self.key, label.as_bytes()]))
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn bernoulli_half(&mut self) -> bool {
        self.inner.random::<bool>()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `n × dim` matrix of independent standard normals.
pub fn sample_noise(rng: &mut Rng, n: usize, dim: usize) -> Result<Matrix> {
    if n == 0 || dim == 0 {
        return Err(Error::contract(format!(
            "sample_noise needs n, dim > 0 (got n={n}, dim={dim})"
        )));
    }
    let data = (0..n * dim).map(|_| rng.normal()).collect();
    Matrix::from_vec(n, dim, data)
}
