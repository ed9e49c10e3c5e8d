//! Gibbs sampler for the two-arm assault/shield model.
//!
//! Latent structure: `n_VA ~ Binom(n_V, p_A)`, `n_PI ~ Binom(n_P, p_A)`,
//! `n_VI ~ Binom(n_VA, 1 - ε)`, with flat Beta(1, 1) priors on `p_A` and
//! `1 - ε`. Every full conditional is a standard distribution, so each sweep
//! draws exactly from
//!
//! * `p_A | n_VA ~ Beta(n_VA + n_PI + 1, n_V - n_VA + n_P - n_PI + 1)`
//! * `1 - ε | n_VA ~ Beta(n_VI + 1, n_VA - n_VI + 1)`
//! * `n_VA - n_VI | p_A, ε ~ Binom(n_V - n_VI, p_A ε / (1 - p_A (1 - ε)))`
//!
//! The last line holds because each uninfected vaccinee was either assaulted
//! and shielded (probability `p_A ε`) or never assaulted (`1 - p_A`).

mod diagnostics;

pub use diagnostics::{diagnostics, variable_diagnostics, Diagnostics, VariableDiagnostics};

use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_from_moments, BetaParams};
use crate::error::{domain, Result};
use crate::model::{MomentSummary, TrialCounts};
use crate::numerics::{binomial_unchecked, sample_beta, RngState, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    /// Iterations per chain, burn-in included.
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub tail_threshold: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_iter: 50_000,
            burn_in: 5_000,
            thin: 1,
            n_chains: 4,
            seed: 42,
            tail_threshold: 0.9,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(domain(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(domain("thin must be at least 1"));
        }
        if self.n_chains < 2 {
            return Err(domain("at least two chains are required"));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.n_iter - self.burn_in).div_ceil(self.thin)
    }
}

/// Current values of the unobserved nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsState {
    pub eps: f64,
    pub p_a: f64,
    pub n_va: u64,
}

/// One chain: the counts, its random stream and the current state.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    counts: TrialCounts,
    rng: StreamRng,
    state: GibbsState,
}

impl GibbsChain {
    /// Starts a chain near the placebo-arm rate, jittered by the stream so that
    /// chains begin from different points.
    pub fn new(counts: &TrialCounts, stream: RngState) -> Result<Self> {
        counts.validate()?;
        let mut rng = stream.rng();
        let base_pa = (counts.n_pi as f64 + 1.0) / (counts.n_p as f64 + 2.0);
        let p_a = (base_pa * (0.5 + rng.random::<f64>())).min(1.0);
        let eps = 0.5 + 0.4 * (rng.random::<f64>() - 0.5);
        let n_va = ((counts.n_v as f64 * p_a).round() as u64).clamp(counts.n_vi, counts.n_v);
        Ok(Self {
            counts: counts.clone(),
            rng,
            state: GibbsState { eps, p_a, n_va },
        })
    }

    pub fn state(&self) -> GibbsState {
        self.state
    }

    /// Mutable access to the chain's generator, so that extended samplers can
    /// interleave their own draws.
    pub fn rng_mut(&mut self) -> &mut StreamRng {
        &mut self.rng
    }

    /// One full sweep over `p_A`, `ε` and `n_VA`.
    pub fn step(&mut self) -> GibbsState {
        let c = &self.counts;
        let n_va = self.state.n_va;

        let pa_post = BetaParams::new(
            (n_va + c.n_pi) as f64 + 1.0,
            (c.n_v - n_va + c.n_p - c.n_pi) as f64 + 1.0,
        )
        .expect("shapes >= 1");
        let p_a = sample_beta(&mut self.rng, pa_post);

        let ffe_post = BetaParams::new(c.n_vi as f64 + 1.0, (n_va - c.n_vi) as f64 + 1.0)
            .expect("shapes >= 1");
        let eps = 1.0 - sample_beta(&mut self.rng, ffe_post);

        let shielded_or_missed = p_a * eps / (1.0 - p_a * (1.0 - eps));
        let q = if shielded_or_missed.is_finite() {
            shielded_or_missed.clamp(0.0, 1.0)
        } else {
            0.0
        };
        let n_va = c.n_vi + binomial_unchecked(&mut self.rng, c.n_v - c.n_vi, q);

        self.state = GibbsState { eps, p_a, n_va };
        self.state
    }
}

/// Draws of every monitored node, one inner vector per chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcSamples {
    pub eps_draws: Vec<Vec<f64>>,
    pub pa_draws: Vec<Vec<f64>>,
    pub nva_draws: Vec<Vec<u64>>,
    pub diagnostics: Diagnostics,
}

impl McmcSamples {
    pub fn n_chains(&self) -> usize {
        self.eps_draws.len()
    }

    pub fn pooled_eps(&self) -> Vec<f64> {
        self.eps_draws.iter().flatten().copied().collect()
    }

    pub fn pooled_pa(&self) -> Vec<f64> {
        self.pa_draws.iter().flatten().copied().collect()
    }

    pub fn pooled_nva(&self) -> Vec<f64> {
        self.nva_draws.iter().flatten().map(|&n| n as f64).collect()
    }

    /// Diagnostics flag non-convergence without failing the run.
    pub fn converged(&self) -> bool {
        self.diagnostics.converged()
    }
}

struct ChainDraws {
    eps: Vec<f64>,
    pa: Vec<f64>,
    nva: Vec<u64>,
}

fn run_one(counts: &TrialCounts, config: &McmcConfig, chain: usize) -> ChainDraws {
    let mut sampler = GibbsChain::new(counts, RngState::new(config.seed, chain as u64))
        .expect("counts validated");
    let n = config.draws_per_chain();
    let mut out = ChainDraws {
        eps: Vec::with_capacity(n),
        pa: Vec::with_capacity(n),
        nva: Vec::with_capacity(n),
    };
    for it in 0..config.n_iter {
        let s = sampler.step();
        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            out.eps.push(s.eps);
            out.pa.push(s.p_a);
            out.nva.push(s.n_va);
        }
    }
    out
}

/// Runs `config.n_chains` independent chains, chain `i` on stream `i`.
pub fn run_chains(counts: &TrialCounts, config: &McmcConfig) -> Result<McmcSamples> {
    counts.validate()?;
    config.validate()?;

    #[cfg(feature = "parallel")]
    let chains: Vec<ChainDraws> = (0..config.n_chains)
        .into_par_iter()
        .map(|i| run_one(counts, config, i))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let chains: Vec<ChainDraws> = (0..config.n_chains).map(|i| run_one(counts, config, i)).collect();

    let mut samples = McmcSamples {
        eps_draws: Vec::with_capacity(chains.len()),
        pa_draws: Vec::with_capacity(chains.len()),
        nva_draws: Vec::with_capacity(chains.len()),
        diagnostics: Diagnostics::default(),
    };
    for c in chains {
        samples.eps_draws.push(c.eps);
        samples.pa_draws.push(c.pa);
        samples.nva_draws.push(c.nva);
    }
    samples.diagnostics = diagnostics(&samples)?;
    Ok(samples)
}

/// Pooled summary of the `ε` draws.
///
/// The mode is that of the moment-matched Beta; histogram maxima depend too
/// much on the bin width. When no Beta matches (e.g. zero spread) the mean is
/// reported instead.
pub fn summarize(samples: &McmcSamples, tail_threshold: f64) -> Result<MomentSummary> {
    let draws = samples.pooled_eps();
    if draws.is_empty() {
        return Err(domain("cannot summarize empty chains"));
    }
    let (mean, sd) = mean_sd(&draws);
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = draws.iter().filter(|&&x| x >= tail_threshold).count() as f64 / draws.len() as f64;
    let mode = beta_from_moments(mean, sd)
        .ok()
        .and_then(|b| b.mode())
        .unwrap_or(mean);
    Ok(MomentSummary {
        mean,
        sd,
        mode,
        ci_low: empirical_quantile(&sorted, 0.025),
        ci_high: empirical_quantile(&sorted, 0.975),
        tail_threshold,
        tail_prob: tail,
    })
}

/// Mean and sample standard deviation (divisor `n - 1`; zero for one value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Linear-interpolation quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
