//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string for the page to
//! draw; errors come back as JS exceptions carrying the message.

use serde::Serialize;
use vaxinfer_core::beta::fit_posterior;
use vaxinfer_core::exact::{posterior_density, posterior_summary};
use vaxinfer_core::forecast::{forecast_approx, forecast_mc, EpsSource, ForecastSpec};
use vaxinfer_core::severity::{difference_summary, severity_report};
use vaxinfer_core::{BetaParams, MomentSummary, SevereCounts, TrialCounts};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct EfficacyView {
    summary: MomentSummary,
    beta_fit: BetaParams,
    eps: Vec<f64>,
    density: Vec<f64>,
    beta_density: Vec<f64>,
}

#[derive(Serialize)]
struct ForecastView {
    mean: f64,
    sd: f64,
    approx_mean: f64,
    approx_sd: f64,
    /// `[n_vi, count]` pairs.
    histogram: Vec<(u64, u64)>,
}

#[derive(Serialize)]
struct ArmView {
    r: f64,
    s: f64,
    mean: f64,
    sd: f64,
    density: Vec<f64>,
}

#[derive(Serialize)]
struct SeverityView {
    x: Vec<f64>,
    vaccine: ArmView,
    placebo: ArmView,
    next_severe_free: f64,
    difference_mean: f64,
    difference_sd: f64,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("view types serialize")
}

pub fn efficacy_json(n_v: u64, n_p: u64, n_vi: u64, n_pi: u64, grid: usize) -> Result<String, String> {
    let counts = TrialCounts::new("custom", n_v, n_p, n_vi, n_pi, None).map_err(|e| e.to_string())?;
    let post = posterior_density(&counts, grid).map_err(|e| e.to_string())?;
    let summary = posterior_summary(&post, 0.9);
    let beta_fit = fit_posterior(&summary).map_err(|e| e.to_string())?;
    let beta_density = post.grid.iter().map(|&x| beta_fit.pdf(x)).collect();
    Ok(to_json(&EfficacyView { summary, beta_fit, eps: post.grid, density: post.density, beta_density }))
}

pub fn forecast_json(
    n: u64,
    pa: f64,
    pa_sd: f64,
    eps_mean: f64,
    eps_sd: f64,
    samples: usize,
    seed: u64,
) -> Result<String, String> {
    let eps = if eps_sd > 0.0 {
        EpsSource::Beta(vaxinfer_core::beta::beta_from_moments(eps_mean, eps_sd).map_err(|e| e.to_string())?)
    } else {
        EpsSource::Point(eps_mean)
    };
    let spec = ForecastSpec { n_v_new: n, pa_mean: pa, pa_sd, eps, n_samples: samples, seed };
    let mc = forecast_mc(&spec).map_err(|e| e.to_string())?;
    let (approx_mean, approx_sd) = forecast_approx(&spec);
    Ok(to_json(&ForecastView { mean: mc.mean, sd: mc.sd, approx_mean, approx_sd, histogram: mc.histogram }))
}

pub fn severity_json(n_vi: u64, n_vis: u64, n_pi: u64, n_pis: u64) -> Result<String, String> {
    // Arm sizes do not enter the severity posteriors; any value that satisfies
    // the count invariants will do.
    let n = n_vi.max(n_pi).max(1);
    let counts = TrialCounts::new(
        "custom",
        n,
        n,
        n_vi,
        n_pi,
        Some(SevereCounts { vaccine: n_vis, placebo: n_pis }),
    )
    .map_err(|e| e.to_string())?;
    let post = severity_report(&counts).map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let arm = |b: BetaParams| ArmView {
        r: b.r(),
        s: b.s(),
        mean: b.mean(),
        sd: b.sd(),
        density: x.iter().map(|&t| b.pdf(t)).collect(),
    };
    let (difference_mean, difference_sd) = difference_summary(post.placebo_arm, post.vaccine_arm);
    Ok(to_json(&SeverityView {
        vaccine: arm(post.vaccine_arm),
        placebo: arm(post.placebo_arm),
        x,
        next_severe_free: post.next_severe_free,
        difference_mean,
        difference_sd,
    }))
}

#[wasm_bindgen]
pub fn efficacy(n_v: u32, n_p: u32, n_vi: u32, n_pi: u32, grid: u32) -> Result<String, JsValue> {
    efficacy_json(n_v.into(), n_p.into(), n_vi.into(), n_pi.into(), grid as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn forecast(
    n: u32,
    pa: f64,
    pa_sd: f64,
    eps_mean: f64,
    eps_sd: f64,
    samples: u32,
    seed: u32,
) -> Result<String, JsValue> {
    forecast_json(n.into(), pa, pa_sd, eps_mean, eps_sd, samples as usize, seed.into())
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn severity(n_vi: u32, n_vis: u32, n_pi: u32, n_pis: u32) -> Result<String, JsValue> {
    severity_json(n_vi.into(), n_vis.into(), n_pi.into(), n_pis.into()).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn efficacy_view_for_pfizer() {
        let v: Value = serde_json::from_str(&efficacy_json(18198, 18325, 8, 162, 801).unwrap()).unwrap();
        assert!((v["summary"]["mean"].as_f64().unwrap() - 0.944).abs() < 0.001);
        assert_eq!(v["eps"].as_array().unwrap().len(), 801);
        assert_eq!(v["beta_density"].as_array().unwrap().len(), 801);
        assert!(efficacy_json(10, 10, 11, 0, 801).is_err());
    }

    #[test]
    fn forecast_view_point_case() {
        let v: Value =
            serde_json::from_str(&forecast_json(100_000, 0.01, 0.0, 0.944, 0.0, 100_000, 1).unwrap()).unwrap();
        assert!((v["mean"].as_f64().unwrap() - 56.0).abs() < 0.5);
        assert!((v["approx_sd"].as_f64().unwrap() - 7.48).abs() < 0.01);
        assert!(forecast_json(100, 0.01, 0.0, 0.5, 0.6, 100_000, 1).is_err());
    }

    #[test]
    fn severity_view_final_moderna() {
        let v: Value = serde_json::from_str(&severity_json(11, 0, 185, 30).unwrap()).unwrap();
        assert_eq!(v["vaccine"]["s"].as_f64(), Some(12.0));
        assert!((v["next_severe_free"].as_f64().unwrap() - 12.0 / 13.0).abs() < 1e-15);
        assert!(severity_json(3, 4, 10, 1).is_err());
    }
}
