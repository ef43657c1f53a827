//! Multi-generator GANs with a built-in privacy adversary (privGAN), the
//! membership-inference attacks used to audit them, and discrete-distribution
//! oracles for the closed-form results behind the model.

pub mod attacks;
pub mod data;
pub mod error;
pub mod evalmetrics;
pub mod experiment;
mod fsutil;
pub mod models;
pub mod numkit;
pub mod theory;

pub use error::{Error, Result};
