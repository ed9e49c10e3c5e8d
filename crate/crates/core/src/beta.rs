//! Conjugate-Beta toolkit: moments, moment matching, prior reshaping and
//! Laplace's rule of succession.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::MomentSummary;
use crate::numerics;

/// Shape pair `(r, s)` of a Beta distribution, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeta", into = "RawBeta")]
pub struct BetaParams {
    r: f64,
    s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeta {
    r: f64,
    s: f64,
}

impl TryFrom<RawBeta> for BetaParams {
    type Error = crate::Error;
    fn try_from(raw: RawBeta) -> Result<Self> {
        BetaParams::new(raw.r, raw.s)
    }
}

impl From<BetaParams> for RawBeta {
    fn from(b: BetaParams) -> Self {
        RawBeta { r: b.r, s: b.s }
    }
}

impl BetaParams {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if r > 0.0 && s > 0.0 && r.is_finite() && s.is_finite() {
            Ok(Self { r, s })
        } else {
            Err(domain(format!("Beta shapes must be finite and positive, got ({r}, {s})")))
        }
    }

    /// The flat prior, `Beta(1, 1)`.
    pub fn uniform() -> Self {
        Self { r: 1.0, s: 1.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn mean(&self) -> f64 {
        self.r / (self.r + self.s)
    }

    pub fn sd(&self) -> f64 {
        let n = self.r + self.s;
        (self.r * self.s / ((n + 1.0) * n * n)).sqrt()
    }

    /// `(r - 1) / (r + s - 2)` when both shapes exceed one; otherwise the
    /// density peaks at a boundary (or is flat) and `None` is returned.
    pub fn mode(&self) -> Option<f64> {
        if self.r > 1.0 && self.s > 1.0 {
            Some((self.r - 1.0) / (self.r + self.s - 2.0))
        } else {
            None
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        numerics::beta_ln_pdf(x, self.r, self.s).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        numerics::reg_inc_beta_unchecked(x.clamp(0.0, 1.0), self.r, self.s)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        numerics::beta_quantile(p, self.r, self.s)
    }
}

/// Mean and standard deviation of `Beta(r, s)`.
pub fn beta_moments(params: BetaParams) -> (f64, f64) {
    (params.mean(), params.sd())
}

/// Solves the mean/variance equations for the Beta shapes.
pub fn beta_from_moments(mean: f64, sd: f64) -> Result<BetaParams> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(domain(format!("moment matching needs 0 < mean < 1, got {mean}")));
    }
    let var = sd * sd;
    if !(var > 0.0) || var >= mean * (1.0 - mean) {
        return Err(domain(format!(
            "no Beta has mean {mean} and sd {sd}: need 0 < sd^2 < mean(1 - mean)"
        )));
    }
    let r = (1.0 - mean) * mean * mean / var - mean;
    let s = r * (1.0 - mean) / mean;
    BetaParams::new(r, s)
}

/// Applies an informative Beta prior to a flat-prior Beta posterior.
pub fn reshape_with_prior(flat_fit: BetaParams, prior: BetaParams) -> Result<BetaParams> {
    let r = prior.r + flat_fit.r - 1.0;
    let s = prior.s + flat_fit.s - 1.0;
    if r <= 0.0 || s <= 0.0 {
        return Err(domain(format!(
            "reshaped Beta would have non-positive shape ({r}, {s})"
        )));
    }
    BetaParams::new(r, s)
}

/// Laplace's rule of succession, `(x + 1) / (n + 2)`.
pub fn rule_of_succession(successes: u64, trials: u64) -> Result<f64> {
    if successes > trials {
        return Err(domain(format!(
            "successes ({successes}) exceed trials ({trials})"
        )));
    }
    Ok((successes as f64 + 1.0) / (trials as f64 + 2.0))
}

/// Beta matching the mean and sd of a posterior summary. No histogram fit is
/// involved; only the two moments are used.
pub fn fit_posterior(summary: &MomentSummary) -> Result<BetaParams> {
    beta_from_moments(summary.mean, summary.sd)
}
