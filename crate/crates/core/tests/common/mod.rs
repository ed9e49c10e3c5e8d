//! Forward-simulation oracle shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use vaxinfer_core::numerics::{sample_binomial, RngState};
use vaxinfer_core::TrialCounts;

/// Accepted `(eps, p_a, n_va)` triples from rejection sampling: draw the
/// parameters from their flat priors, simulate the trial, keep draws whose
/// infected counts equal the observed ones.
pub fn rejection_draws(counts: &TrialCounts, n_forward: usize, seed: u64) -> Vec<(f64, f64, u64)> {
    let mut rng = RngState::new(seed, 0).rng();
    let mut kept = Vec::new();
    for _ in 0..n_forward {
        let eps: f64 = rng.random();
        let p_a: f64 = rng.random();
        let n_pi = sample_binomial(&mut rng, counts.n_p, p_a).unwrap();
        if n_pi != counts.n_pi {
            continue;
        }
        let n_va = sample_binomial(&mut rng, counts.n_v, p_a).unwrap();
        let n_vi = sample_binomial(&mut rng, n_va, 1.0 - eps).unwrap();
        if n_vi == counts.n_vi {
            kept.push((eps, p_a, n_va));
        }
    }
    kept
}

/// Histogram density on `bins` equal-width bins of `[0, 1]`.
pub fn density_histogram(xs: impl Iterator<Item = f64>, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    let mut n = 0usize;
    for x in xs {
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
        n += 1;
    }
    counts.into_iter().map(|c| c as f64 * bins as f64 / n as f64).collect()
}

pub fn tiny_counts() -> TrialCounts {
    TrialCounts::new("tiny", 5, 5, 1, 2, None).unwrap()
}
