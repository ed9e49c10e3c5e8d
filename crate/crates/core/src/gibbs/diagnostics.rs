//! Split-chain R-hat, effective sample size and Monte Carlo standard errors.

use serde::{Deserialize, Serialize};

use super::McmcSamples;
use crate::error::{Error, Result};

const RHAT_LIMIT: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDiagnostics {
    pub rhat: f64,
    pub ess: f64,
    /// Monte Carlo standard error of the mean, `sd / sqrt(ess)`.
    pub mcse: f64,
    /// Monte Carlo standard error of the standard deviation.
    pub mcse_sd: f64,
}

impl Default for VariableDiagnostics {
    fn default() -> Self {
        Self { rhat: 1.0, ess: 0.0, mcse: 0.0, mcse_sd: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub eps: VariableDiagnostics,
    pub p_a: VariableDiagnostics,
    pub n_va: VariableDiagnostics,
}

impl Diagnostics {
    /// True when every R-hat is at most 1.05.
    pub fn converged(&self) -> bool {
        [self.eps, self.p_a, self.n_va].iter().all(|d| d.rhat <= RHAT_LIMIT)
    }
}

/// Diagnostics of every monitored node.
pub fn diagnostics(samples: &McmcSamples) -> Result<Diagnostics> {
    let nva: Vec<Vec<f64>> = samples
        .nva_draws
        .iter()
        .map(|c| c.iter().map(|&n| n as f64).collect())
        .collect();
    Ok(Diagnostics {
        eps: variable_diagnostics(&samples.eps_draws)?,
        p_a: variable_diagnostics(&samples.pa_draws)?,
        n_va: variable_diagnostics(&nva)?,
    })
}

/// Diagnostics of one scalar monitored over several chains of equal length.
pub fn variable_diagnostics(chains: &[Vec<f64>]) -> Result<VariableDiagnostics> {
    if chains.len() < 2 {
        return Err(Error::Diagnostics("at least two chains are required".into()));
    }
    let n = chains[0].len();
    if n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::Diagnostics(
            "chains must have equal length of at least 4 draws".into(),
        ));
    }
    let split = split_chains(chains);
    let (rhat, ess) = rhat_and_ess(&split);

    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let (mean, sd) = super::mean_sd(&pooled);
    let mcse = if ess > 0.0 { sd / ess.sqrt() } else { 0.0 };

    // sd error by the delta method on the second central moment
    let squared: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|x| (x - mean) * (x - mean)).collect())
        .collect();
    let (_, ess_sq) = rhat_and_ess(&squared);
    let sq_pooled: Vec<f64> = squared.iter().flatten().copied().collect();
    let (_, sd_sq) = super::mean_sd(&sq_pooled);
    let mcse_sd = if sd > 0.0 && ess_sq > 0.0 {
        sd_sq / ess_sq.sqrt() / (2.0 * sd)
    } else {
        0.0
    };

    Ok(VariableDiagnostics { rhat, ess, mcse, mcse_sd })
}

/// Each chain cut into a first and a second half (a middle draw of an odd
/// length is dropped).
fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains[0].len() / 2;
    let skip = chains[0].len() - 2 * half;
    chains
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[half + skip..].to_vec()])
        .collect()
}

/// Potential scale reduction and multi-chain ESS with Geyer's initial
/// positive (and monotone) sequence truncation.
fn rhat_and_ess(chains: &[Vec<f64>]) -> (f64, f64) {
    let m = chains.len() as f64;
    let n = chains[0].len();
    let nf = n as f64;
    let total = m * nf;

    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let within = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;

    if within == 0.0 {
        // all chains constant: identical chains agree by convention
        return if b_over_n == 0.0 { (1.0, total) } else { (f64::INFINITY, 1.0) };
    }
    let var_plus = (nf - 1.0) / nf * within + b_over_n;
    let rhat = (var_plus / within).sqrt();

    let autocov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| {
                c[..n - lag]
                    .iter()
                    .zip(&c[lag..])
                    .map(|(a, b)| (a - mu) * (b - mu))
                    .sum::<f64>()
                    / nf
            })
            .sum::<f64>()
            / m
    };
    let rho = |lag: usize| 1.0 - (within - autocov(lag)) / var_plus;

    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let ceiling = total * total.log10().max(1.0);
    let ess = if tau > 0.0 { (total / tau).min(ceiling) } else { ceiling };
    (rhat, ess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;
    use rand::Rng;

    #[test]
    fn single_chain_is_an_error() {
        assert!(variable_diagnostics(&[vec![0.1; 10]]).is_err());
    }

    #[test]
    fn identical_constant_chains() {
        let d = variable_diagnostics(&[vec![0.5; 100], vec![0.5; 100]]).unwrap();
        assert_eq!(d.rhat, 1.0);
        assert_eq!(d.mcse, 0.0);
    }

    #[test]
    fn shifted_chains_are_flagged() {
        let mut rng = RngState::new(5, 0).rng();
        let a: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 3.0).collect();
        let d = variable_diagnostics(&[a, b]).unwrap();
        assert!(d.rhat > 1.5);
    }

    #[test]
    fn independent_uniform_chains() {
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut rng = RngState::new(11, i).rng();
                (0..5000).map(|_| rng.random::<f64>()).collect()
            })
            .collect();
        let d = variable_diagnostics(&chains).unwrap();
        assert!(d.rhat < 1.01, "rhat {}", d.rhat);
        assert!(d.ess > 0.5 * 20_000.0, "ess {}", d.ess);
        let expected_mcse = (1.0_f64 / 12.0).sqrt() / 20_000f64.sqrt();
        assert!((d.mcse / expected_mcse - 1.0).abs() < 0.2);
    }

    #[test]
    fn autocorrelated_chain_has_lower_ess() {
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut rng = RngState::new(12, i).rng();
                let mut x = 0.0;
                (0..5000)
                    .map(|_| {
                        x = 0.9 * x + rng.random::<f64>() - 0.5;
                        x
                    })
                    .collect()
            })
            .collect();
        let d = variable_diagnostics(&chains).unwrap();
        // AR(1) with phi = 0.9: ESS ~ N (1 - phi) / (1 + phi)
        let target = 20_000.0 * 0.1 / 1.9;
        assert!(d.ess > 0.6 * target && d.ess < 1.5 * target, "ess {}", d.ess);
    }
}
