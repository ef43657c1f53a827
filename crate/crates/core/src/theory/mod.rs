//! Closed-form results on finite supports, each paired with an independent
//! route (direct summation, exhaustive search or numeric optimization):
//! optimal discriminators, the generator cost `C_λ` and its minimum, the
//! fidelity/spread trade-off, and the optimal score-based membership adversary.

mod adversary;
mod divergence;
mod optimal;
mod tradeoff;

pub use adversary::{
    brute_force_adversary, optimal_adversary, AdversaryDecision, AdversarySetup, BRUTE_FORCE_MAX_OUTCOMES,
};
pub use divergence::{jsd, jsd_n, kl, tvd, DiscreteDist};
pub use optimal::{
    c_lambda, c_lambda_direct, c_lambda_minimum, optimal_discriminators, optimal_pair_discriminator,
    optimal_privacy_discriminator, OptimalDiscriminators,
};
pub use tradeoff::{
    lemma1_tradeoff_curve, tradeoff_objective, TradeoffCurve, TradeoffOptions, TradeoffPoint, MAX_PARTS, MAX_SUPPORT,
};
