//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use vaxinfer_core::beta::{beta_from_moments, fit_posterior, reshape_with_prior, rule_of_succession};
use vaxinfer_core::exact::{posterior_density, posterior_summary};
use vaxinfer_core::forecast::{
    calibrated_pa, design_study, forecast_approx, forecast_mc, shift_placebo_to_vaccine, DesignSpec,
    EpsSource, ForecastSpec,
};
use vaxinfer_core::gibbs::{mean_sd, run_chains, summarize, McmcConfig};
use vaxinfer_core::model::{builtin_dataset, find_builtin, load_dataset, serialize_dataset, DataFormat};
use vaxinfer_core::severity::{difference_summary, severity_report};
use vaxinfer_core::{BetaParams, TrialCounts};

use crate::report::*;
use crate::svg::density_plot;
use crate::{CliError, Command, Common, Format, TOOL_VERSION};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Infer(a) => infer(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Severity(a) => severity(a, out),
        Command::Reshape(a) => reshape(a, out),
        Command::Succession(a) => succession(a, out),
        Command::DesignStudy(a) => design(a, out),
        Command::ListData(a) => list_data(a, out),
    }
}

/// Resolves a built-in slug/label or a dataset file to a single record.
pub fn resolve_dataset(data: &str, label: Option<&str>, format: Option<Format>) -> Result<TrialCounts> {
    let path = Path::new(data);
    if !path.is_file() {
        if label.is_some() {
            return Err(CliError::Usage("--label only applies to dataset files".into()));
        }
        return find_builtin(data).ok_or_else(|| {
            let known = vaxinfer_core::model::builtin_slugs().join(", ");
            CliError::Usage(format!("unknown dataset `{data}` (not a file; built-ins: {known})"))
        });
    }
    let fmt = match format {
        Some(Format::Csv) => DataFormat::Csv,
        Some(Format::Json) => DataFormat::Json,
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => DataFormat::Csv,
        None => DataFormat::Json,
    };
    let text = fs::read_to_string(path)?;
    let trials = load_dataset(&text, fmt)?;
    match label {
        Some(l) => trials
            .into_iter()
            .find(|t| t.label == l)
            .ok_or_else(|| CliError::Usage(format!("no record labelled `{l}` in {data}"))),
        None => match trials.len() {
            1 => Ok(trials.into_iter().next().unwrap()),
            0 => Err(CliError::Usage(format!("{data} holds no records"))),
            n => Err(CliError::Usage(format!("{data} holds {n} records; pick one with --label"))),
        },
    }
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

/// Flattens a JSON document into `field,value` rows with dotted paths.
fn to_flat_csv<T: Serialize>(v: &T) -> Result<String> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&key(k), x, rows)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&key(&i.to_string()), x, rows)),
            Value::Null => rows.push((prefix.to_string(), String::new())),
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", &serde_json::to_value(v).expect("report types serialize"), &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"]).map_err(csv_err)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(csv_err)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?).unwrap())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv output: {e}"))
}

/// Writes `<stem>.json` or `<stem>.csv` depending on `--format`.
fn write_summary<T: Serialize>(dir: &Path, stem: &str, format: Option<Format>, v: &T) -> Result<PathBuf> {
    let (path, body) = match format.unwrap_or(Format::Json) {
        Format::Json => (dir.join(format!("{stem}.json")), to_json(v)),
        Format::Csv => (dir.join(format!("{stem}.csv")), to_flat_csv(v)?),
    };
    fs::write(&path, body)?;
    Ok(path)
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Numeric(format!("{what} is not finite")))
    }
}

fn infer(a: crate::InferArgs, out: &mut dyn Write) -> Result<()> {
    let counts = resolve_dataset(&a.data.data, a.data.label.as_deref(), a.common.format)?;
    if !(a.tail > 0.0 && a.tail < 1.0) {
        return Err(CliError::Usage(format!("--tail must lie in (0, 1), got {}", a.tail)));
    }
    let run_exact = matches!(a.engine, Engine::Exact | Engine::Both);
    let run_gibbs = matches!(a.engine, Engine::Gibbs | Engine::Both);
    let mcmc = McmcConfig {
        n_iter: a.iter,
        burn_in: a.burn_in,
        thin: a.thin,
        n_chains: a.chains,
        seed: a.seed,
        tail_threshold: a.tail,
    };
    if run_gibbs {
        mcmc.validate()?;
    }

    let density = if run_exact || a.density { Some(posterior_density(&counts, a.grid)?) } else { None };
    let exact = match (&density, run_exact) {
        (Some(p), true) => Some(posterior_summary(p, a.tail)),
        _ => None,
    };
    let samples = if run_gibbs { Some(run_chains(&counts, &mcmc)?) } else { None };
    let gibbs = samples.as_ref().map(|s| summarize(s, a.tail)).transpose()?;

    let summary = exact.or(gibbs).expect("at least one engine ran");
    for (v, name) in [(summary.mean, "posterior mean"), (summary.sd, "posterior sd")] {
        finite(v, name)?;
    }
    let beta_fit = fit_posterior(&summary)?;
    let diagnostics = samples.as_ref().map(|s| s.diagnostics);
    let warning = diagnostics.filter(|d| !d.converged()).map(|d| {
        format!(
            "chains have not converged (R-hat eps {:.4}, p_A {:.4}, n_VA {:.4}); increase --iter",
            d.eps.rhat, d.p_a.rhat, d.n_va.rhat
        )
    });
    let n_va = samples.as_ref().map(|s| {
        let (mean, sd) = mean_sd(&s.pooled_nva());
        CountSummary { mean, sd }
    });

    let report = Report {
        schema_version: REPORT_SCHEMA.into(),
        dataset_label: counts.label.clone(),
        counts: counts.clone(),
        engine: a.engine,
        summary,
        exact,
        gibbs,
        differences: exact.zip(gibbs).map(|(e, g)| EngineDifferences::between(&e, &g)),
        beta_fit,
        n_va,
        diagnostics,
        warning: warning.clone(),
        provenance: Provenance {
            seed: a.seed,
            tool_version: TOOL_VERSION.into(),
            config: RunConfig {
                grid_size: run_exact.then_some(a.grid),
                mcmc: run_gibbs.then_some(mcmc),
                tail_threshold: a.tail,
            },
        },
    };
    report.validate().map_err(|e| CliError::Numeric(e.to_string()))?;

    let dir = out_dir(&a.common)?;
    fs::write(dir.join("report.json"), to_json(&report))?;
    if a.common.format == Some(Format::Csv) {
        fs::write(dir.join("report.csv"), to_flat_csv(&report)?)?;
    }

    if a.density {
        // The exact grid density is used for the plot whichever engine ran.
        let post = density.as_ref().expect("density computed when requested");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["eps", "density"]).map_err(csv_err)?;
        for (x, y) in post.grid.iter().zip(&post.density) {
            w.write_record([format!("{x}"), format!("{y}")]).map_err(csv_err)?;
        }
        fs::write(dir.join("density.csv"), w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)?;
        let svg = density_plot(
            &format!("{}: posterior of ε", counts.label),
            &post.grid,
            &post.density,
            summary.mean,
            summary.mode,
        );
        fs::write(dir.join("density.svg"), svg)?;
    }

    writeln!(
        out,
        "{}: efficacy (posterior mean) = {:.4} ± {:.4}, 95% CI [{:.4}, {:.4}], P(eps >= {}) = {:.4}",
        counts.label, summary.mean, summary.sd, summary.ci_low, summary.ci_high, a.tail, summary.tail_prob
    )?;
    if let Some(w) = warning {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn predict(a: crate::PredictArgs, out: &mut dyn Write) -> Result<()> {
    let eps = match (&a.from_report, a.eps, a.eps_sd, a.exact_eps) {
        (Some(path), ..) => {
            let text = fs::read_to_string(path)?;
            let report = Report::from_json(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            EpsSource::Beta(report.beta_fit)
        }
        (None, Some(e), None, true) => EpsSource::Point(e),
        (None, Some(m), Some(s), false) => EpsSource::Beta(beta_from_moments(m, s)?),
        (None, Some(_), None, false) => {
            return Err(CliError::Usage("--eps needs either --eps-sd or --exact-eps".into()))
        }
        (None, None, ..) => {
            return Err(CliError::Usage("give the efficacy with --eps/--eps-mean or --from-report".into()))
        }
        _ => return Err(CliError::Usage("conflicting efficacy options".into())),
    };
    let spec = ForecastSpec {
        n_v_new: a.n,
        pa_mean: a.pa,
        pa_sd: a.pa_sd,
        eps,
        n_samples: a.samples,
        seed: a.seed,
    };
    spec.validate()?;
    let mc = forecast_mc(&spec)?;
    let (am, asd) = forecast_approx(&spec);
    finite(mc.mean, "forecast mean")?;
    let report = ForecastReport {
        schema_version: FORECAST_SCHEMA.into(),
        spec,
        monte_carlo: ForecastNumbers { mean: mc.mean, sd: mc.sd, p_ov: mc.p_ov },
        approximation: ForecastNumbers { mean: am, sd: asd, p_ov: None },
        tool_version: TOOL_VERSION.into(),
    };
    report.validate().map_err(|e| CliError::Numeric(e.to_string()))?;

    let dir = out_dir(&a.common)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_vi", "count"]).map_err(csv_err)?;
    for (k, c) in &mc.histogram {
        w.write_record([k.to_string(), c.to_string()]).map_err(csv_err)?;
    }
    fs::write(dir.join("forecast.csv"), w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)?;
    write_summary(&dir, "forecast", a.common.format, &report)?;

    writeln!(
        out,
        "infected vaccinees: Monte Carlo {:.2} ± {:.2}, approximation {:.2} ± {:.2}",
        mc.mean, mc.sd, am, asd
    )?;
    if let Some(p) = mc.p_ov {
        writeln!(out, "per-vaccinee infection probability p_A (1 - eps) = {p}")?;
    }
    Ok(())
}

fn severity(a: crate::SeverityArgs, out: &mut dyn Write) -> Result<()> {
    let counts = resolve_dataset(&a.data.data, a.data.label.as_deref(), a.common.format)?;
    let post = severity_report(&counts)?;
    let summary = |b: BetaParams| CountSummary { mean: b.mean(), sd: b.sd() };
    let (dm, ds) = difference_summary(post.placebo_arm, post.vaccine_arm);
    let report = SeverityReport {
        schema_version: SEVERITY_SCHEMA.into(),
        dataset_label: counts.label.clone(),
        posteriors: post,
        vaccine_arm: summary(post.vaccine_arm),
        placebo_arm: summary(post.placebo_arm),
        difference: CountSummary { mean: dm, sd: ds },
        tool_version: TOOL_VERSION.into(),
    };
    report.validate().map_err(|e| CliError::Numeric(e.to_string()))?;
    let dir = out_dir(&a.common)?;
    write_summary(&dir, "severity", a.common.format, &report)?;

    let sev = counts.severe.expect("checked by severity_report");
    let (v, p) = (post.vaccine_arm, post.placebo_arm);
    writeln!(
        out,
        "vaccine arm: Beta({}, {}) -> {:.4} ± {:.4}",
        v.r(),
        v.s(),
        v.mean(),
        v.sd()
    )?;
    writeln!(
        out,
        "placebo arm: Beta({}, {}) -> {:.4} ± {:.4}",
        p.r(),
        p.s(),
        p.mean(),
        p.sd()
    )?;
    writeln!(out, "difference (placebo - vaccine): {dm:.4} ± {ds:.4}")?;
    writeln!(
        out,
        "next infected vaccinee free of severe disease: {}/{} = {:.4}",
        counts.n_vi - sev.vaccine + 1,
        counts.n_vi + 2,
        post.next_severe_free
    )?;
    Ok(())
}

fn reshape(a: crate::ReshapeArgs, out: &mut dyn Write) -> Result<()> {
    let flat = BetaParams::new(a.flat_r, a.flat_s)?;
    let prior = BetaParams::new(a.prior_r, a.prior_s)?;
    let post = reshape_with_prior(flat, prior)?;
    let report = ReshapeReport {
        schema_version: RESHAPE_SCHEMA.into(),
        flat_fit: flat,
        prior,
        posterior: post,
        mean: post.mean(),
        sd: post.sd(),
        tool_version: TOOL_VERSION.into(),
    };
    report.validate().map_err(|e| CliError::Numeric(e.to_string()))?;
    if a.common.out_dir.is_some() {
        write_summary(&out_dir(&a.common)?, "reshape", a.common.format, &report)?;
    }
    writeln!(out, "Beta({}, {}) -> {:.4} ± {:.4}", post.r(), post.s(), post.mean(), post.sd())?;
    Ok(())
}

#[derive(Serialize)]
struct SuccessionReport {
    successes: u64,
    trials: u64,
    probability: f64,
    tool_version: &'static str,
}

fn succession(a: crate::SuccessionArgs, out: &mut dyn Write) -> Result<()> {
    let p = rule_of_succession(a.successes, a.trials)?;
    if a.common.out_dir.is_some() {
        let report =
            SuccessionReport { successes: a.successes, trials: a.trials, probability: p, tool_version: TOOL_VERSION };
        write_summary(&out_dir(&a.common)?, "succession", a.common.format, &report)?;
    }
    writeln!(out, "{p:.4}")?;
    Ok(())
}

fn design(a: crate::DesignArgs, out: &mut dyn Write) -> Result<()> {
    let counts = resolve_dataset(&a.data, a.label.as_deref(), a.common.format)?;
    if !(a.shift > 0.0 && a.shift < 1.0) {
        return Err(CliError::Usage(format!("--shift must lie in (0, 1), got {}", a.shift)));
    }
    let true_pa = a.pa.unwrap_or_else(|| calibrated_pa(counts.n_p, counts.n_pi));
    let base = DesignSpec {
        n_v: counts.n_v,
        n_p: counts.n_p,
        true_eps: a.eps,
        true_pa,
        n_replications: a.replications,
        seed: a.seed,
        grid_size: a.grid,
    };
    let (n_v, n_p) = shift_placebo_to_vaccine(counts.n_v, counts.n_p, a.shift);
    let alt = DesignSpec { n_v, n_p, ..base };
    let baseline = design_study(&base)?;
    let alternative = design_study(&alt)?;
    let sd_ratio = finite(alternative.mean_sd_eps / baseline.mean_sd_eps, "sd ratio")?;
    let report = DesignReport {
        schema_version: DESIGN_SCHEMA.into(),
        true_eps: a.eps,
        true_pa,
        seed: a.seed,
        baseline: baseline.clone(),
        alternative: alternative.clone(),
        sd_ratio,
        tool_version: TOOL_VERSION.into(),
    };
    report.validate().map_err(|e| CliError::Numeric(e.to_string()))?;
    write_summary(&out_dir(&a.common)?, "design_study", a.common.format, &report)?;
    writeln!(out, "baseline    nV={:>6} nP={:>6}: mean sd(eps) = {:.4}", base.n_v, base.n_p, baseline.mean_sd_eps)?;
    writeln!(out, "alternative nV={:>6} nP={:>6}: mean sd(eps) = {:.4}", n_v, n_p, alternative.mean_sd_eps)?;
    writeln!(out, "sd ratio = {sd_ratio:.3}")?;
    Ok(())
}

fn list_data(a: crate::ListArgs, out: &mut dyn Write) -> Result<()> {
    let fmt = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => DataFormat::Csv,
        Format::Json => DataFormat::Json,
    };
    let body = serialize_dataset(&builtin_dataset(), fmt);
    if let Some(dir) = &a.common.out_dir {
        fs::create_dir_all(dir)?;
        let ext = if fmt == DataFormat::Csv { "csv" } else { "json" };
        fs::write(dir.join(format!("trials.{ext}")), &body)?;
    }
    out.write_all(body.as_bytes())?;
    Ok(())
}
