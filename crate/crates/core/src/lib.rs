//! Bayesian inference of vaccine efficacy from two-arm trial counts.
//!
//! Three engines produce the posterior of the efficacy `ε`: direct numerical
//! marginalization ([`exact`]), a Gibbs sampler over the latent number of
//! assaulted vaccinees ([`gibbs`]), and a moment-matched Beta ([`beta`]).
//! [`forecast`] propagates the result to infections in a new vaccinated
//! cohort and [`severity`] handles the severe-disease counts.

pub mod beta;
pub mod error;
pub mod exact;
pub mod forecast;
pub mod gibbs;
pub mod model;
pub mod numerics;
pub mod severity;

pub use beta::BetaParams;
pub use error::{Error, Result};
pub use exact::EfficacyPosterior;
pub use model::{MomentSummary, SevereCounts, TrialCounts};
pub use numerics::RngState;
