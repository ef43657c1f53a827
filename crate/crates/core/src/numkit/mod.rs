//! Deterministic numeric core: matrices, dense networks, losses, Adam and a
//! splittable PRNG. Everything else in the crate is built on these pieces.

mod adam;
mod loss;
mod matrix;
mod mlp;
mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{bce_loss, categorical_ce_loss, LossOutput};
pub use matrix::{sq_dist, Matrix};
pub use mlp::{sigmoid, Activation, ForwardCache, Gradients, MlpModel};
pub use rng::{sample_noise, Rng};

/// Probabilities are clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]` before any log.
pub const EPS_CLAMP: f64 = 1e-7;

/// Dimension of the generator noise input.
pub const NOISE_DIM: usize = 100;
