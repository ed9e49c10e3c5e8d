use std::fs;
use std::path::Path;
use std::process::Command;

use vaxinfer_cli::report::{DesignReport, ForecastReport, Report, SeverityReport};
use vaxinfer_cli::{run, EXIT_USAGE};

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
fn vax(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("vaxinfer").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn vax_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut all = args.to_vec();
    all.extend(["--out-dir", dir.to_str().unwrap()]);
    vax(&all)
}

fn read_report(dir: &Path) -> Report {
    Report::from_json(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn infer_both_engines_agree_on_final_moderna() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = vax_in(dir.path(), &["infer", "--data", "moderna-2", "--engine", "both", "--seed", "42"]);
    assert_eq!(code, 0);
    assert!(out.contains("efficacy (posterior mean) = 0.935"), "{out}");
    let r = read_report(dir.path());
    let (e, g) = (r.exact.unwrap(), r.gibbs.unwrap());
    assert!((e.mean - 0.935).abs() < 0.005 && (g.mean - 0.935).abs() < 0.005);
    let d = r.differences.unwrap();
    assert_eq!(d.mean, (e.mean - g.mean).abs());
    assert!(r.diagnostics.unwrap().converged());
    assert!(r.warning.is_none());
    let n_va = r.n_va.unwrap();
    assert!((n_va.mean - 185.0).abs() < 3.0);
}

#[test]
fn infer_exact_reports_mode_but_headlines_mean() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) =
        vax_in(dir.path(), &["infer", "--data", "pfizer", "--engine", "exact", "--grid", "2001", "--density"]);
    assert_eq!(code, 0);
    let r = read_report(dir.path());
    assert!((r.summary.mode - 0.950).abs() < 0.001);
    assert!((r.summary.mean - 0.944).abs() < 0.001);
    assert!(out.contains(&format!("efficacy (posterior mean) = {:.4}", r.summary.mean)));
    assert!(!out.contains(&format!("{:.4}", r.summary.mode)));
    assert!(r.gibbs.is_none() && r.diagnostics.is_none());

    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps,density"));
    assert_eq!(lines.count(), 2001);
    let svg = fs::read_to_string(dir.path().join("density.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray") && !svg.contains("href"));
}

#[test]
fn unknown_dataset_and_bad_flags_exit_2() {
    let (code, _, err) = vax(&["infer", "--data", "nosuch"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nosuch"));
    assert_eq!(vax(&["infer", "--data", "pfizer", "--engine", "magic"]).0, EXIT_USAGE);
    assert_eq!(vax(&["infer", "--data", "pfizer", "--grid", "10", "--engine", "exact"]).0, EXIT_USAGE);
    assert_eq!(vax(&["infer", "--data", "pfizer", "--chains", "1"]).0, EXIT_USAGE);
    assert_eq!(vax(&["frobnicate"]).0, EXIT_USAGE);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["infer", "--data", "az-ldsd", "--seed", "7", "--iter", "6000", "--burn-in", "1000"];
    assert_eq!(vax_in(a.path(), &args).0, 0);
    assert_eq!(vax_in(b.path(), &args).0, 0);
    let ra = fs::read(a.path().join("report.json")).unwrap();
    let rb = fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);

    let args = ["predict", "--n", "10000", "--pa", "0.02", "--eps-mean", "0.9", "--eps-sd", "0.05", "--samples", "20000"];
    assert_eq!(vax_in(a.path(), &args).0, 0);
    assert_eq!(vax_in(b.path(), &args).0, 0);
    for f in ["forecast.json", "forecast.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn dataset_files_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("trials.json");
    fs::write(
        &json,
        r#"{"trials":[{"label":"A","nV":1000,"nP":1000,"nVI":2,"nPI":20},
                      {"label":"B","nV":1000,"nP":1000,"nVI":5,"nPI":20,"nVIs":0,"nPIs":3}]}"#,
    )
    .unwrap();
    let j = json.to_str().unwrap();
    assert_eq!(vax_in(dir.path(), &["infer", "--data", j, "--engine", "exact"]).0, EXIT_USAGE);
    assert_eq!(vax_in(dir.path(), &["infer", "--data", j, "--label", "C", "--engine", "exact"]).0, EXIT_USAGE);
    assert_eq!(vax_in(dir.path(), &["infer", "--data", j, "--label", "B", "--engine", "exact"]).0, 0);
    assert_eq!(read_report(dir.path()).dataset_label, "B");

    let csv = dir.path().join("trials.csv");
    fs::write(&csv, "label,nV,nP,nVI,nPI,nVIs,nPIs\nA,1000,1000,2,20,,\n").unwrap();
    assert_eq!(vax_in(dir.path(), &["infer", "--data", csv.to_str().unwrap(), "--engine", "exact"]).0, 0);
    assert_eq!(read_report(dir.path()).counts.n_vi, 2);

    // severity counts absent from A: the severity command refuses it
    let (code, _, err) = vax_in(dir.path(), &["severity", "--data", j, "--label", "A"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("severity"), "{err}");

    fs::write(&csv, "label,nV,nP,nVI,nPI,nVIs,nPIs\nA,10,1000,20,20,,\n").unwrap();
    let (code, _, err) = vax_in(dir.path(), &["infer", "--data", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nVI"), "{err}");
}

#[test]
fn predict_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["predict", "--n", "100000", "--pa", "0.01"];
    let load = || -> ForecastReport {
        let r: ForecastReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("forecast.json")).unwrap()).unwrap();
        r.validate().unwrap();
        r
    };

    let mut args = base.to_vec();
    args.extend(["--eps", "0.944", "--exact-eps"]);
    assert_eq!(vax_in(dir.path(), &args).0, 0);
    let r = load();
    assert!((r.monte_carlo.mean - 56.0).abs() < 0.5 && (r.monte_carlo.sd - 7.5).abs() < 0.3);
    assert!((r.monte_carlo.p_ov.unwrap() - 0.00056).abs() < 1e-15);
    let hist = fs::read_to_string(dir.path().join("forecast.csv")).unwrap();
    assert!(hist.starts_with("n_vi,count\n"));
    let total: u64 = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1_000_000);

    let mut args = base.to_vec();
    args.extend(["--eps-mean", "0.944", "--eps-sd", "0.019"]);
    assert_eq!(vax_in(dir.path(), &args).0, 0);
    assert!((load().approximation.sd - 20.4).abs() < 0.1);

    args.extend(["--pa-sd", "0.001"]);
    assert_eq!(vax_in(dir.path(), &args).0, 0);
    assert!((load().approximation.sd - 21.2).abs() < 0.1);

    let mut args = base.to_vec();
    args.extend(["--eps-mean", "0.5", "--eps-sd", "0.6"]);
    assert_eq!(vax_in(dir.path(), &args).0, EXIT_USAGE);
    let mut args = base.to_vec();
    args.extend(["--eps", "0.9"]);
    assert_eq!(vax_in(dir.path(), &args).0, EXIT_USAGE);
}

#[test]
fn predict_from_report_uses_beta_fit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vax_in(dir.path(), &["infer", "--data", "pfizer", "--engine", "exact"]).0, 0);
    let report = dir.path().join("report.json");
    let fit = read_report(dir.path()).beta_fit;
    let (code, _, _) = vax_in(
        dir.path(),
        &["predict", "--n", "100000", "--pa", "0.01", "--from-report", report.to_str().unwrap(), "--samples", "50000"],
    );
    assert_eq!(code, 0);
    let r: ForecastReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("forecast.json")).unwrap()).unwrap();
    assert!((r.approximation.mean - 1000.0 * (1.0 - fit.mean())).abs() < 1e-9);

    // a tampered report fails validation
    let text = fs::read_to_string(&report).unwrap().replace("\"engine\"", "\"engine_x\"");
    fs::write(&report, text).unwrap();
    let (code, _, _) =
        vax_in(dir.path(), &["predict", "--n", "100", "--pa", "0.01", "--from-report", report.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn small_commands() {
    let (code, out, _) = vax(&["succession", "11", "11"]);
    assert_eq!((code, out.trim()), (0, "0.9231"));
    assert_eq!(vax(&["succession", "12", "11"]).0, EXIT_USAGE);

    let (code, out, _) =
        vax(&["reshape", "--flat-r", "137.3", "--flat-s", "8.14", "--prior-r", "1", "--prior-s", "1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Beta(137.3, 8.14)"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = vax_in(dir.path(), &["severity", "--data", "moderna-2"]);
    assert_eq!(code, 0);
    assert!(out.contains("Beta(1, 12)") && out.contains("12/13 = 0.9231"), "{out}");
    let r: SeverityReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("severity.json")).unwrap()).unwrap();
    r.validate().unwrap();
    assert!((r.vaccine_arm.mean - 1.0 / 13.0).abs() < 1e-12);

    let (code, out, _) = vax_in(dir.path(), &["severity", "--data", "pfizer", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.contains("Beta(2, 8)"));
    let csv = fs::read_to_string(dir.path().join("severity.csv")).unwrap();
    assert!(csv.starts_with("field,value\n") && csv.contains("posteriors.vaccine_arm.r,2.0"), "{csv}");

    let (code, out, _) = vax(&["list-data", "--format", "json"]);
    assert_eq!(code, 0);
    let parsed = vaxinfer_core::model::load_dataset(&out, vaxinfer_core::model::DataFormat::Json).unwrap();
    assert_eq!(parsed, vaxinfer_core::model::builtin_dataset());
}

#[test]
fn design_study_command() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) =
        vax_in(dir.path(), &["design-study", "--replications", "100", "--grid", "301", "--seed", "5"]);
    assert_eq!(code, 0, "{out}");
    let r: DesignReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("design_study.json")).unwrap()).unwrap();
    r.validate().unwrap();
    assert_eq!(r.baseline.n_v + r.baseline.n_p, r.alternative.n_v + r.alternative.n_p);
    assert_eq!(r.baseline.per_replication.len(), 100);
    assert!(r.sd_ratio < 1.0);
    assert_eq!(vax(&["design-study", "--replications", "10"]).0, EXIT_USAGE);
}

#[test]
fn binary_exit_codes_and_seed_env() {
    let exe = env!("CARGO_BIN_EXE_vaxinfer");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(exe).args(["infer", "--data", "nosuch"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let run_with_env = |seed: &str| {
        let out = Command::new(exe)
            .args(["infer", "--data", "az-sdsd", "--engine", "gibbs", "--iter", "3000", "--burn-in", "500"])
            .args(["--out-dir", dir.path().to_str().unwrap()])
            .env("VAXINFER_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        read_report(dir.path()).provenance.seed
    };
    assert_eq!(run_with_env("1234"), 1234);
    let status = Command::new(exe)
        .args(["infer", "--data", "pfizer"])
        .env("VAXINFER_SEED", "not-a-number")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
