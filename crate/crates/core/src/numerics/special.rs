//! Log-gamma, log-beta and the regularized incomplete beta function.

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("ln_gamma requires a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

/// Lanczos approximation without argument checks. Callers guarantee `x > 0`.
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(r, s)`.
pub fn ln_beta(r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) || !r.is_finite() || !s.is_finite() {
        return Err(domain(format!("ln_beta requires r > 0 and s > 0, got ({r}, {s})")));
    }
    Ok(ln_beta_unchecked(r, s))
}

pub(crate) fn ln_beta_unchecked(r: f64, s: f64) -> f64 {
    ln_gamma_unchecked(r) + ln_gamma_unchecked(s) - ln_gamma_unchecked(r + s)
}

/// Regularized incomplete beta `I_x(r, s)`.
///
/// Evaluated with a modified Lentz continued fraction. For
/// `x > (r + 1) / (r + s + 2)` the complement `1 - I_{1-x}(s, r)` is used,
/// which keeps the fraction in its fast-converging region.
pub fn reg_inc_beta(x: f64, r: f64, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("reg_inc_beta requires 0 <= x <= 1, got {x}")));
    }
    if !(r > 0.0 && s > 0.0) || !r.is_finite() || !s.is_finite() {
        return Err(domain(format!("reg_inc_beta requires r > 0 and s > 0, got ({r}, {s})")));
    }
    Ok(reg_inc_beta_unchecked(x, r, s))
}

pub(crate) fn reg_inc_beta_unchecked(x: f64, r: f64, s: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = r * x.ln() + s * (-x).ln_1p() - ln_beta_unchecked(r, s);
    if x < (r + 1.0) / (r + s + 2.0) {
        (ln_front.exp() * beta_cf(x, r, s) / r).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(1.0 - x, s, r) / s).clamp(0.0, 1.0)
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let max_iter = 200 + 20 * (a.max(b).sqrt() as usize);

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Log density of `Beta(r, s)` at `x`. Returns `-inf` outside the support.
pub(crate) fn beta_ln_pdf(x: f64, r: f64, s: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    let a = if r == 1.0 { 0.0 } else { (r - 1.0) * x.ln() };
    let b = if s == 1.0 { 0.0 } else { (s - 1.0) * (-x).ln_1p() };
    let v = a + b - ln_beta_unchecked(r, s);
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Inverse of `x -> I_x(r, s)`: returns `x` with `I_x(r, s) = p`.
pub fn beta_quantile(p: f64, r: f64, s: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("beta_quantile requires 0 < p < 1, got {p}")));
    }
    if !(r > 0.0 && s > 0.0) || !r.is_finite() || !s.is_finite() {
        return Err(domain(format!("beta_quantile requires r > 0 and s > 0, got ({r}, {s})")));
    }
    // Newton steps safeguarded by a shrinking bracket.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = r / (r + s);
    for _ in 0..300 {
        let f = reg_inc_beta_unchecked(x, r, s) - p;
        if f.abs() < 1e-13 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < 1e-16 {
            break;
        }
        let dens = beta_ln_pdf(x, r, s).exp();
        let newton = x - f / dens;
        x = if dens > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}
