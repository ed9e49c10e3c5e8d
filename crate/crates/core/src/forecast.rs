//! Infections expected among a newly vaccinated cohort, and a trial-design
//! simulation for the placebo/vaccine split.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_from_moments, BetaParams};
use crate::error::{domain, Result};
use crate::exact::posterior_density;
use crate::model::TrialCounts;
use crate::numerics::{binomial_unchecked, sample_beta, RngState};

pub const MIN_SAMPLES: usize = 10_000;
const CHUNK: usize = 1 << 16;

/// Where the efficacy of a forecast comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsSource {
    /// A known value.
    Point(f64),
    /// An uncertain value described by a Beta.
    Beta(BetaParams),
}

impl EpsSource {
    pub fn mean(&self) -> f64 {
        match self {
            EpsSource::Point(e) => *e,
            EpsSource::Beta(b) => b.mean(),
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            EpsSource::Point(_) => 0.0,
            EpsSource::Beta(b) => b.sd(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSpec {
    /// Size of the new vaccinated cohort.
    pub n_v_new: u64,
    /// Expected assault probability in the new population.
    pub pa_mean: f64,
    /// Its uncertainty; zero means the value is known.
    pub pa_sd: f64,
    pub eps: EpsSource,
    pub n_samples: usize,
    pub seed: u64,
}

impl ForecastSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pa_mean > 0.0 && self.pa_mean < 1.0) {
            return Err(domain(format!("assault probability must lie in (0, 1), got {}", self.pa_mean)));
        }
        if !(self.pa_sd >= 0.0) {
            return Err(domain("assault probability sd must be non-negative"));
        }
        if let EpsSource::Point(e) = self.eps {
            if !(0.0..=1.0).contains(&e) {
                return Err(domain(format!("efficacy must lie in [0, 1], got {e}")));
            }
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(domain(format!(
                "at least {MIN_SAMPLES} Monte Carlo samples are required, got {}",
                self.n_samples
            )));
        }
        self.pa_distribution().map(|_| ())
    }

    /// `None` for a known assault probability, otherwise the moment-matched Beta.
    pub fn pa_distribution(&self) -> Result<Option<BetaParams>> {
        if self.pa_sd == 0.0 {
            Ok(None)
        } else {
            beta_from_moments(self.pa_mean, self.pa_sd).map(Some)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub mean: f64,
    pub sd: f64,
    /// `(number of infected vaccinees, number of samples)`, ascending.
    pub histogram: Vec<(u64, u64)>,
    /// `p_A (1 - ε)` when both are known exactly.
    pub p_ov: Option<f64>,
}

impl ForecastResult {
    pub fn total(&self) -> u64 {
        self.histogram.iter().map(|(_, c)| c).sum()
    }
}

/// Direct Monte Carlo: `n_A ~ Binom(n'_V, p'_A)`, then `n'_VI ~ Binom(n_A, 1 - ε)`,
/// with `p'_A` and `ε` redrawn per sample when uncertain.
pub fn forecast_mc(spec: &ForecastSpec) -> Result<ForecastResult> {
    spec.validate()?;
    let pa_dist = spec.pa_distribution()?;
    let n_chunks = spec.n_samples.div_ceil(CHUNK);

    let run_chunk = |chunk: usize| -> BTreeMap<u64, u64> {
        let mut rng = RngState::new(spec.seed, chunk as u64).rng();
        let len = CHUNK.min(spec.n_samples - chunk * CHUNK);
        let mut hist = BTreeMap::new();
        for _ in 0..len {
            let p_a = match pa_dist {
                Some(b) => sample_beta(&mut rng, b),
                None => spec.pa_mean,
            };
            let eps = match spec.eps {
                EpsSource::Point(e) => e,
                EpsSource::Beta(b) => sample_beta(&mut rng, b),
            };
            let assaulted = binomial_unchecked(&mut rng, spec.n_v_new, p_a);
            let infected = binomial_unchecked(&mut rng, assaulted, 1.0 - eps);
            *hist.entry(infected).or_insert(0) += 1;
        }
        hist
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<BTreeMap<u64, u64>> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<BTreeMap<u64, u64>> = (0..n_chunks).map(run_chunk).collect();

    let mut hist = BTreeMap::new();
    for part in parts {
        for (k, v) in part {
            *hist.entry(k).or_insert(0u64) += v;
        }
    }
    let n = spec.n_samples as f64;
    let mean = hist.iter().map(|(k, c)| *k as f64 * *c as f64).sum::<f64>() / n;
    let var = hist
        .iter()
        .map(|(k, c)| (*k as f64 - mean).powi(2) * *c as f64)
        .sum::<f64>()
        / (n - 1.0);

    let p_ov = match (pa_dist, spec.eps) {
        (None, EpsSource::Point(e)) => Some(spec.pa_mean * (1.0 - e)),
        _ => None,
    };
    Ok(ForecastResult { mean, sd: var.sqrt(), histogram: hist.into_iter().collect(), p_ov })
}

/// Linearized mean and sd of the predicted infections: the binomial spread at
/// the expected parameters plus each parameter's uncertainty propagated to
/// first order and added in quadrature.
pub fn forecast_approx(spec: &ForecastSpec) -> (f64, f64) {
    let n = spec.n_v_new as f64;
    let p = spec.pa_mean;
    let miss = 1.0 - spec.eps.mean();
    let mean = n * p * miss;
    let var = mean * (1.0 - p * miss)
        + (n * miss).powi(2) * spec.pa_sd.powi(2)
        + (n * p).powi(2) * spec.eps.sd().powi(2);
    (mean, var.sqrt())
}

/// One simulated trial and its inferred efficacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub n_vi: u64,
    pub n_pi: u64,
    pub eps_mean: f64,
    pub eps_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStudy {
    pub n_v: u64,
    pub n_p: u64,
    /// Average posterior sd of `ε` over the replications.
    pub mean_sd_eps: f64,
    pub per_replication: Vec<Replication>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub n_v: u64,
    pub n_p: u64,
    pub true_eps: f64,
    pub true_pa: f64,
    pub n_replications: usize,
    pub seed: u64,
    /// Grid used by the exact engine for each replication.
    pub grid_size: usize,
}

/// Assault probability that reproduces an observed placebo infection count
/// in expectation.
pub fn calibrated_pa(n_p: u64, n_pi: u64) -> f64 {
    n_pi as f64 / n_p as f64
}

/// Simulates `n_replications` trials of the given design and infers `ε` for
/// each with the exact engine. Replications where nobody in the placebo arm
/// gets infected are kept.
pub fn design_study(spec: &DesignSpec) -> Result<DesignStudy> {
    if spec.n_replications < 100 {
        return Err(domain(format!(
            "a design study needs at least 100 replications, got {}",
            spec.n_replications
        )));
    }
    if !(0.0..=1.0).contains(&spec.true_eps) || !(0.0..=1.0).contains(&spec.true_pa) {
        return Err(domain("true efficacy and assault probability must lie in [0, 1]"));
    }
    let one = |i: usize| -> Result<Replication> {
        let mut rng = RngState::new(spec.seed, i as u64).rng();
        let n_pi = binomial_unchecked(&mut rng, spec.n_p, spec.true_pa);
        let n_va = binomial_unchecked(&mut rng, spec.n_v, spec.true_pa);
        let n_vi = binomial_unchecked(&mut rng, n_va, 1.0 - spec.true_eps);
        let counts = TrialCounts::new(format!("replication {i}"), spec.n_v, spec.n_p, n_vi, n_pi, None)?;
        let post = posterior_density(&counts, spec.grid_size)?;
        Ok(Replication { n_vi, n_pi, eps_mean: post.mean(), eps_sd: post.sd() })
    };

    #[cfg(feature = "parallel")]
    let reps: Result<Vec<Replication>> = (0..spec.n_replications).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let reps: Result<Vec<Replication>> = (0..spec.n_replications).map(one).collect();
    let per_replication = reps?;

    let mean_sd_eps =
        per_replication.iter().map(|r| r.eps_sd).sum::<f64>() / per_replication.len() as f64;
    Ok(DesignStudy { n_v: spec.n_v, n_p: spec.n_p, mean_sd_eps, per_replication })
}

/// Moves a fraction of the placebo arm into the vaccine arm, keeping the
/// total number of participants fixed.
pub fn shift_placebo_to_vaccine(n_v: u64, n_p: u64, fraction: f64) -> (u64, u64) {
    let moved = (n_p as f64 * fraction).round() as u64;
    (n_v + moved, n_p - moved)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn spec(eps: EpsSource, pa_sd: f64) -> ForecastSpec {
        ForecastSpec { n_v_new: 100_000, pa_mean: 0.01, pa_sd, eps, n_samples: 200_000, seed: 3 }
    }

    #[test]
    fn degenerate_approx_is_binomial() {
        let (m, s) = forecast_approx(&spec(EpsSource::Point(0.944), 0.0));
        let p = 0.01 * (1.0 - 0.944);
        assert!((m - 100_000.0 * p).abs() < 1e-9);
        assert!((s - (100_000.0 * p * (1.0 - p)).sqrt()).abs() < 1e-9);
        assert!((s - 7.48).abs() < 0.005);
    }

    #[test]
    fn eps_term_alone() {
        // sd contribution of eps: n' E(p'_A) sigma(eps)
        let b = beta_from_moments(0.944, 0.019).unwrap();
        let (_, with) = forecast_approx(&spec(EpsSource::Beta(b), 0.0));
        let (_, without) = forecast_approx(&spec(EpsSource::Point(0.944), 0.0));
        let eps_term = (with * with - without * without).sqrt();
        assert!((eps_term - 19.0).abs() < 1e-9, "{eps_term}");
    }

    #[test]
    fn histogram_covers_every_sample() {
        let s = spec(EpsSource::Point(0.9), 0.001);
        let r = forecast_mc(&s).unwrap();
        assert_eq!(r.total(), s.n_samples as u64);
        assert!(r.histogram.iter().all(|(k, _)| *k <= s.n_v_new));
        assert!(r.p_ov.is_none());
    }

    #[test]
    fn invalid_specs() {
        assert!(forecast_mc(&ForecastSpec { pa_mean: 0.0, ..spec(EpsSource::Point(0.9), 0.0) }).is_err());
        assert!(forecast_mc(&ForecastSpec { n_samples: 10, ..spec(EpsSource::Point(0.9), 0.0) }).is_err());
        assert!(forecast_mc(&spec(EpsSource::Point(0.9), 0.2)).is_err());
        assert!(forecast_mc(&spec(EpsSource::Point(1.3), 0.0)).is_err());
    }

    #[test]
    fn arm_shift_keeps_total() {
        let (v, p) = shift_placebo_to_vaccine(18198, 18325, 2.0 / 3.0);
        assert_eq!(v + p, 18198 + 18325);
        assert_eq!(p, 6108);
    }
}
