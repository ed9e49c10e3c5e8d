//! Special functions and random-variate generation.

mod random;
mod special;

pub use random::{sample_beta, sample_binomial, RngState, StreamRng};
pub use special::{beta_quantile, ln_beta, ln_gamma, reg_inc_beta};

pub(crate) use random::binomial_unchecked;
pub(crate) use special::{beta_ln_pdf, ln_beta_unchecked, ln_gamma_unchecked, reg_inc_beta_unchecked};

/// `log(sum(exp(xs)))` without overflow. Empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
