//! Seeded random streams and the samplers used by every Monte Carlo path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{domain, Result};

/// Generator behind every stream. ChaCha output is specified bit-for-bit, so
/// draws agree across platforms and targets (including wasm32).
pub type StreamRng = ChaCha8Rng;

/// Identifies one reproducible random stream.
///
/// Streams sharing a seed are independent ChaCha streams (the stream id is the
/// cipher nonce), which is how parallel chains and replications get their own
/// generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Builds the generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Same seed, different stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }
}

/// Log of a `Gamma(shape, 1)` variate (Marsaglia–Tsang).
///
/// Working on the log scale keeps tiny shapes from underflowing to zero.
fn ln_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        let u: f64 = rng.random();
        return ln_gamma_variate(rng, shape + 1.0) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// One `Beta(r, s)` draw from the ratio of two gamma variates.
pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, params: BetaParams) -> f64 {
    let lx = ln_gamma_variate(rng, params.r());
    let ly = ln_gamma_variate(rng, params.s());
    // x / (x + y) = 1 / (1 + exp(ly - lx))
    1.0 / (1.0 + (ly - lx).exp())
}

/// One `Binom(n, p)` draw.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binomial probability must lie in [0, 1], got {p}")));
    }
    Ok(binomial_unchecked(rng, n, p))
}

pub(crate) fn binomial_unchecked<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    rand_distr::Binomial::new(n, p)
        .expect("validated binomial parameters")
        .sample(rng)
}
