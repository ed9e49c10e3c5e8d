//! Posterior of the efficacy by direct numerical marginalization.
//!
//! With uniform priors on `ε` and `p_A`, integrating `p_A` out analytically and
//! summing over the unobserved number of assaulted vaccinees `n_VA` gives
//!
//! ```text
//! f(ε | data) ∝ (1-ε)^n_VI · Σ_{n_VA = n_VI}^{n_V} ε^(n_VA - n_VI)
//!               / ((n_VA - n_VI)! (n_V - n_VA)!)
//!               · B(n_VA + n_PI + 1, n_V - n_VA + n_P - n_PI + 1)
//! ```
//!
//! which is evaluated on a grid in log space and normalized by quadrature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{MomentSummary, TrialCounts};
use crate::numerics::{ln_beta_unchecked, ln_gamma_unchecked};

/// Terms more than this many log units below the running maximum are dropped.
const LSE_CUTOFF: f64 = 40.0;

pub const DEFAULT_GRID_SIZE: usize = 2001;
pub const MIN_GRID_SIZE: usize = 101;

const ANCHOR_EVERY: usize = 256;

fn direct_term(counts: &TrialCounts, k: u64) -> f64 {
    let shielded = (k - counts.n_vi) as f64;
    let unassaulted = (counts.n_v - k) as f64;
    -ln_gamma_unchecked(shielded + 1.0) - ln_gamma_unchecked(unassaulted + 1.0)
        + ln_beta_unchecked(
            (k + counts.n_pi) as f64 + 1.0,
            unassaulted + (counts.n_p - counts.n_pi) as f64 + 1.0,
        )
}

/// The `ε`-independent part of each summand, indexed by `n_VA - n_VI`.
#[derive(Debug, Clone)]
pub struct LogPosterior {
    n_vi: u64,
    base: Vec<f64>,
}

impl LogPosterior {
    pub fn new(counts: &TrialCounts) -> Self {
        let (n_v, n_vi) = (counts.n_v, counts.n_vi);
        let len = (n_v - n_vi + 1) as usize;
        let mut base = Vec::with_capacity(len);
        let mut term = 0.0;
        for j in 0..len {
            let k = n_vi + j as u64;
            // Consecutive terms differ by four logs; re-anchor periodically so
            // rounding cannot accumulate.
            term = if j % ANCHOR_EVERY == 0 {
                direct_term(counts, k)
            } else {
                let (k_prev, n_v, n_p, n_pi) = ((k - 1) as f64, n_v as f64, counts.n_p as f64, counts.n_pi as f64);
                term - (j as f64).ln() + (n_v - k_prev).ln() + (k_prev + n_pi + 1.0).ln()
                    - (n_v - k_prev + n_p - n_pi).ln()
            };
            base.push(term);
        }
        Self { n_vi, base }
    }

    /// Log of the unnormalized density at `eps`, `-inf` where it vanishes.
    pub fn eval(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            // only the n_VA = n_VI term survives (0^0 = 1)
            return self.base[0];
        }
        let infected = if self.n_vi == 0 {
            0.0
        } else if eps >= 1.0 {
            return f64::NEG_INFINITY;
        } else {
            self.n_vi as f64 * (-eps).ln_1p()
        };
        let ln_eps = eps.min(1.0).ln();

        // The summand is log-concave in n_VA, so once it has fallen well past
        // its peak every later term is negligible.
        let mut max = f64::NEG_INFINITY;
        let mut acc = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for (j, b) in self.base.iter().enumerate() {
            let t = b + j as f64 * ln_eps;
            if t > max {
                acc = acc * (max - t).exp() + 1.0;
                max = t;
            } else {
                acc += (t - max).exp();
                if t < prev && t < max - LSE_CUTOFF {
                    break;
                }
            }
            prev = t;
        }
        infected + max + acc.ln()
    }
}

/// Log of the unnormalized efficacy density at one point.
///
/// The additive constant is shared by all `eps` for fixed counts. Repeated
/// evaluation should go through [`LogPosterior`] to reuse the precomputed terms.
pub fn unnormalized_log_posterior(eps: f64, counts: &TrialCounts) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(domain(format!("efficacy must lie in [0, 1], got {eps}")));
    }
    counts.validate()?;
    Ok(LogPosterior::new(counts).eval(eps))
}

/// Normalized density of `ε` tabulated on a grid spanning `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficacyPosterior {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Log of the normalization constant of the unnormalized density.
    pub log_norm: f64,
}

/// Tabulates and normalizes the posterior on `grid_size` uniform points.
pub fn posterior_density(counts: &TrialCounts, grid_size: usize) -> Result<EfficacyPosterior> {
    if grid_size < MIN_GRID_SIZE {
        return Err(domain(format!(
            "grid needs at least {MIN_GRID_SIZE} points, got {grid_size}"
        )));
    }
    counts.validate()?;
    let lp = LogPosterior::new(counts);
    let step = 1.0 / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| if i == grid_size - 1 { 1.0 } else { i as f64 * step })
        .collect();

    #[cfg(feature = "parallel")]
    let log_density: Vec<f64> = grid.par_iter().map(|&e| lp.eval(e)).collect();
    #[cfg(not(feature = "parallel"))]
    let log_density: Vec<f64> = grid.iter().map(|&e| lp.eval(e)).collect();

    let max = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let density: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();
    let mut post = EfficacyPosterior::from_density(grid, density)?;
    post.log_norm += max;
    Ok(post)
}

impl EfficacyPosterior {
    /// Normalizes an arbitrary non-negative density tabulated on an increasing
    /// grid from 0 to 1.
    pub fn from_density(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() != density.len() || grid.len() < 3 {
            return Err(domain("grid and density must have equal length >= 3"));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return Err(domain("grid must start at 0 and end at 1"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("grid must be strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(domain("density must be finite and non-negative"));
        }
        let z = trapezoid(&grid, &density);
        if !(z > 0.0) {
            return Err(domain("density integrates to zero"));
        }
        let density = density.into_iter().map(|d| d / z).collect();
        Ok(Self { grid, density, log_norm: z.ln() })
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn mean(&self) -> f64 {
        let f: Vec<f64> = self.grid.iter().zip(&self.density).map(|(x, d)| x * d).collect();
        trapezoid(&self.grid, &f)
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let f: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(x, d)| (x - m) * (x - m) * d)
            .collect();
        trapezoid(&self.grid, &f).sqrt()
    }

    /// Grid argmax refined by the vertex of the parabola through the log
    /// density at the three surrounding points.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if i == 0 || i + 1 == self.grid.len() {
            return self.grid[i];
        }
        let (x0, x1, x2) = (self.grid[i - 1], self.grid[i], self.grid[i + 1]);
        let (y0, y1, y2) = (self.density[i - 1].ln(), self.density[i].ln(), self.density[i + 1].ln());
        if !(y0.is_finite() && y2.is_finite()) {
            return x1;
        }
        let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
        let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if den == 0.0 {
            return x1;
        }
        (x1 - 0.5 * num / den).clamp(x0, x2)
    }

    /// Cumulative trapezoid integral at each grid point.
    pub fn cdf_table(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
            out.push(acc);
        }
        out
    }

    /// `P(ε <= x)` with the density taken piecewise linear between grid points.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let table = self.cdf_table();
        let i = self.grid.partition_point(|g| *g <= x) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (d0, d1) = (self.density[i], self.density[i + 1]);
        let t = x - x0;
        let slope = (d1 - d0) / (x1 - x0);
        (table[i] + d0 * t + 0.5 * slope * t * t).clamp(0.0, 1.0)
    }

    /// Inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("quantile level must lie in [0, 1], got {p}")));
        }
        let table = self.cdf_table();
        let i = table.partition_point(|c| *c < p);
        if i == 0 {
            return Ok(self.grid[0]);
        }
        if i >= table.len() {
            return Ok(1.0);
        }
        let i = i - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (d0, d1) = (self.density[i], self.density[i + 1]);
        let slope = (d1 - d0) / (x1 - x0);
        let target = p - table[i];
        // d0 t + slope t^2 / 2 = target, in the cancellation-free root form
        let disc = (d0 * d0 + 2.0 * slope * target).max(0.0);
        let denom = d0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * target / denom } else { 0.0 };
        Ok((x0 + t).clamp(x0, x1))
    }

    pub fn tail_prob(&self, threshold: f64) -> f64 {
        1.0 - self.cdf(threshold)
    }
}

/// Mean, sd, mode, central 95% interval and upper-tail probability.
pub fn posterior_summary(post: &EfficacyPosterior, tail_threshold: f64) -> MomentSummary {
    MomentSummary {
        mean: post.mean(),
        sd: post.sd(),
        mode: post.mode(),
        ci_low: post.quantile(0.025).expect("valid level"),
        ci_high: post.quantile(0.975).expect("valid level"),
        tail_threshold,
        tail_prob: post.tail_prob(tail_threshold),
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (yw[0] + yw[1]) * (xw[1] - xw[0]))
        .sum()
}
