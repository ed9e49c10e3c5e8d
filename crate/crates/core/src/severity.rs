//! Severe-disease probabilities per arm.
//!
//! Once the infected counts are observed, the severity nodes are d-separated
//! from `ε` and `p_A`, so with flat priors each arm's probability of a severe
//! course has an exact Beta posterior and no sampling is needed.

use serde::{Deserialize, Serialize};

use crate::beta::{rule_of_succession, BetaParams};
use crate::error::{domain, Error, Result};
use crate::model::TrialCounts;
use crate::numerics::{sample_beta, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityPosteriors {
    /// Posterior of the probability that an infected vaccinee becomes severe.
    pub vaccine_arm: BetaParams,
    /// Same for the placebo arm.
    pub placebo_arm: BetaParams,
    /// Probability that the next infected vaccinee does not become severe,
    /// `(n_VI - n_VIs + 1) / (n_VI + 2)`. Never 1, even with zero severe cases.
    pub next_severe_free: f64,
}

/// `Beta(n_severe + 1, n_infected - n_severe + 1)`.
pub fn severity_posterior(n_infected: u64, n_severe: u64) -> Result<BetaParams> {
    if n_severe > n_infected {
        return Err(domain(format!(
            "severe cases ({n_severe}) exceed infected ({n_infected})"
        )));
    }
    BetaParams::new(n_severe as f64 + 1.0, (n_infected - n_severe) as f64 + 1.0)
}

pub fn severity_report(counts: &TrialCounts) -> Result<SeverityPosteriors> {
    counts.validate()?;
    let severe = counts.severe.ok_or_else(|| {
        Error::Unsupported(format!("`{}` has no severity counts", counts.label))
    })?;
    Ok(SeverityPosteriors {
        vaccine_arm: severity_posterior(counts.n_vi, severe.vaccine)?,
        placebo_arm: severity_posterior(counts.n_pi, severe.placebo)?,
        next_severe_free: rule_of_succession(counts.n_vi - severe.vaccine, counts.n_vi)?,
    })
}

/// Mean and sd of `a - b` for independent quantities given by their own mean
/// and sd.
pub fn difference_of_moments(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, (a.1 * a.1 + b.1 * b.1).sqrt())
}

/// Mean and sd of `X_a - X_b` for independent Beta variables.
pub fn difference_summary(a: BetaParams, b: BetaParams) -> (f64, f64) {
    difference_of_moments((a.mean(), a.sd()), (b.mean(), b.sd()))
}

/// Histogram of `X_a - X_b` from `n_draws` Monte Carlo pairs, on `n_bins`
/// equal bins over `[-1, 1]`. Returns `(bin centre, density)` pairs.
pub fn difference_density(
    a: BetaParams,
    b: BetaParams,
    n_draws: usize,
    n_bins: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if n_draws == 0 || n_bins == 0 {
        return Err(domain("difference density needs draws and bins"));
    }
    let mut rng = RngState::new(seed, 0).rng();
    let width = 2.0 / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for _ in 0..n_draws {
        let d = sample_beta(&mut rng, a) - sample_beta(&mut rng, b);
        let bin = (((d + 1.0) / width) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (-1.0 + (i as f64 + 0.5) * width, c as f64 / (n_draws as f64 * width)))
        .collect())
}
