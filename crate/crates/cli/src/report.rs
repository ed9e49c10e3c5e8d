//! Report documents written by the CLI and their validation.
//!
//! Every document carries a pinned `schema_version`. Reading one back goes
//! through the same types with unknown fields rejected, followed by the
//! semantic checks in `validate`.

use serde::{Deserialize, Serialize};
use vaxinfer_core::forecast::{DesignStudy, ForecastSpec};
use vaxinfer_core::gibbs::{Diagnostics, McmcConfig};
use vaxinfer_core::severity::SeverityPosteriors;
use vaxinfer_core::{BetaParams, MomentSummary, TrialCounts};

pub const REPORT_SCHEMA: &str = "vaxinfer.report/1";
pub const FORECAST_SCHEMA: &str = "vaxinfer.forecast/1";
pub const SEVERITY_SCHEMA: &str = "vaxinfer.severity/1";
pub const DESIGN_SCHEMA: &str = "vaxinfer.design-study/1";
pub const RESHAPE_SCHEMA: &str = "vaxinfer.reshape/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Gibbs,
    Exact,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub tool_version: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid_size: Option<usize>,
    pub mcmc: Option<McmcConfig>,
    pub tail_threshold: f64,
}

/// Absolute differences between the two engines' summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineDifferences {
    pub mean: f64,
    pub sd: f64,
    pub mode: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tail_prob: f64,
}

impl EngineDifferences {
    pub fn between(a: &MomentSummary, b: &MomentSummary) -> Self {
        Self {
            mean: (a.mean - b.mean).abs(),
            sd: (a.sd - b.sd).abs(),
            mode: (a.mode - b.mode).abs(),
            ci_low: (a.ci_low - b.ci_low).abs(),
            ci_high: (a.ci_high - b.ci_high).abs(),
            tail_prob: (a.tail_prob - b.tail_prob).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSummary {
    pub mean: f64,
    pub sd: f64,
}

/// Output of `infer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: String,
    pub dataset_label: String,
    pub counts: TrialCounts,
    pub engine: Engine,
    /// Headline summary: the exact engine's when it ran, otherwise the sampler's.
    pub summary: MomentSummary,
    pub exact: Option<MomentSummary>,
    pub gibbs: Option<MomentSummary>,
    pub differences: Option<EngineDifferences>,
    pub beta_fit: BetaParams,
    /// Posterior of the number of assaulted vaccinees (sampler only).
    pub n_va: Option<CountSummary>,
    pub diagnostics: Option<Diagnostics>,
    pub warning: Option<String>,
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema check failed: {0}")]
    Invalid(String),
}

fn check(cond: bool, msg: &str) -> Result<(), SchemaError> {
    if cond {
        Ok(())
    } else {
        Err(SchemaError::Invalid(msg.to_string()))
    }
}

fn check_summary(s: &MomentSummary) -> Result<(), SchemaError> {
    check(s.sd >= 0.0, "sd must be non-negative")?;
    check(s.ci_low <= s.ci_high, "ci_low must not exceed ci_high")?;
    check((0.0..=1.0).contains(&s.tail_prob), "tail_prob must be a probability")?;
    check(
        s.mean >= s.ci_low - 3.0 * s.sd && s.mean <= s.ci_high + 3.0 * s.sd,
        "mean lies far outside the credible interval",
    )
}

impl Report {
    pub fn validate(&self) -> Result<(), SchemaError> {
        check(self.schema_version == REPORT_SCHEMA, "unexpected schema_version")?;
        check_summary(&self.summary)?;
        match self.engine {
            Engine::Exact => check(
                self.exact.is_some() && self.gibbs.is_none() && self.differences.is_none(),
                "engine=exact carries exactly the exact summary",
            )?,
            Engine::Gibbs => check(
                self.gibbs.is_some() && self.exact.is_none() && self.diagnostics.is_some(),
                "engine=gibbs carries the sampler summary and diagnostics",
            )?,
            Engine::Both => check(
                self.exact.is_some()
                    && self.gibbs.is_some()
                    && self.differences.is_some()
                    && self.diagnostics.is_some(),
                "engine=both carries both summaries and their differences",
            )?,
        }
        for s in [&self.exact, &self.gibbs].into_iter().flatten() {
            check_summary(s)?;
        }
        check(!self.provenance.tool_version.is_empty(), "provenance.tool_version missing")
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let r: Report = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastNumbers {
    pub mean: f64,
    pub sd: f64,
    pub p_ov: Option<f64>,
}

/// Output of `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastReport {
    pub schema_version: String,
    pub spec: ForecastSpec,
    pub monte_carlo: ForecastNumbers,
    pub approximation: ForecastNumbers,
    pub tool_version: String,
}

impl ForecastReport {
    pub fn validate(&self) -> Result<(), SchemaError> {
        check(self.schema_version == FORECAST_SCHEMA, "unexpected schema_version")?;
        check(self.monte_carlo.sd >= 0.0 && self.approximation.sd >= 0.0, "negative sd")?;
        check(
            self.monte_carlo.mean >= 0.0 && self.monte_carlo.mean <= self.spec.n_v_new as f64,
            "forecast mean outside [0, n]",
        )
    }
}

/// Output of `severity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityReport {
    pub schema_version: String,
    pub dataset_label: String,
    pub posteriors: SeverityPosteriors,
    pub vaccine_arm: CountSummary,
    pub placebo_arm: CountSummary,
    /// Placebo minus vaccine arm.
    pub difference: CountSummary,
    pub tool_version: String,
}

impl SeverityReport {
    pub fn validate(&self) -> Result<(), SchemaError> {
        check(self.schema_version == SEVERITY_SCHEMA, "unexpected schema_version")?;
        check(
            self.posteriors.next_severe_free > 0.0 && self.posteriors.next_severe_free < 1.0,
            "severe-free probability must lie strictly inside (0, 1)",
        )
    }
}

/// Output of `design-study`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignReport {
    pub schema_version: String,
    pub true_eps: f64,
    pub true_pa: f64,
    pub seed: u64,
    pub baseline: DesignStudy,
    pub alternative: DesignStudy,
    /// `alternative.mean_sd_eps / baseline.mean_sd_eps`.
    pub sd_ratio: f64,
    pub tool_version: String,
}

impl DesignReport {
    pub fn validate(&self) -> Result<(), SchemaError> {
        check(self.schema_version == DESIGN_SCHEMA, "unexpected schema_version")?;
        check(self.sd_ratio.is_finite() && self.sd_ratio > 0.0, "sd_ratio must be positive")
    }
}

/// Output of `reshape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReshapeReport {
    pub schema_version: String,
    pub flat_fit: BetaParams,
    pub prior: BetaParams,
    pub posterior: BetaParams,
    pub mean: f64,
    pub sd: f64,
    pub tool_version: String,
}

impl ReshapeReport {
    pub fn validate(&self) -> Result<(), SchemaError> {
        check(self.schema_version == RESHAPE_SCHEMA, "unexpected schema_version")
    }
}
