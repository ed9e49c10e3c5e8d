mod common;

use common::{density_histogram, rejection_draws, tiny_counts};
use vaxinfer_core::gibbs::{run_chains, summarize, McmcConfig};
use vaxinfer_core::model::{builtin_dataset, find_builtin, SevereCounts};

fn config(n_iter: usize) -> McmcConfig {
    McmcConfig { n_iter, burn_in: 1_000, ..McmcConfig::default() }
}

#[test]
fn tiny_instance_conditionals_match_rejection_oracle() {
    let counts = tiny_counts();
    let oracle = rejection_draws(&counts, 4_000_000, 5);
    let samples = run_chains(&counts, &config(100_000)).unwrap();

    let eps_oracle = density_histogram(oracle.iter().map(|d| d.0), 10);
    let eps_gibbs = density_histogram(samples.pooled_eps().into_iter(), 10);
    let sup = eps_oracle
        .iter()
        .zip(&eps_gibbs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup < 0.04, "eps sup-norm {sup}");

    let pa_oracle = density_histogram(oracle.iter().map(|d| d.1), 10);
    let pa_gibbs = density_histogram(samples.pooled_pa().into_iter(), 10);
    let sup = pa_oracle
        .iter()
        .zip(&pa_gibbs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup < 0.04, "p_A sup-norm {sup}");

    // n_VA takes values 1..=5 here; compare the probability of each
    let freq = |xs: &mut dyn Iterator<Item = u64>| {
        let mut f = [0.0f64; 6];
        let mut n = 0.0f64;
        for x in xs {
            f[x as usize] += 1.0;
            n += 1.0;
        }
        f.map(|v| v / n)
    };
    let a = freq(&mut oracle.iter().map(|d| d.2));
    let b = freq(&mut samples.nva_draws.iter().flatten().copied());
    for k in 0..6 {
        assert!((a[k] - b[k]).abs() < 0.01, "n_VA = {k}: {} vs {}", a[k], b[k]);
    }
    assert_eq!(a[0], 0.0);
    assert_eq!(b[0], 0.0);
}

#[test]
fn seeded_runs_are_identical() {
    let c = find_builtin("moderna-2").unwrap();
    let a = run_chains(&c, &config(4_000)).unwrap();
    let b = run_chains(&c, &config(4_000)).unwrap();
    assert_eq!(a, b);
    let other = run_chains(&c, &McmcConfig { seed: 43, ..config(4_000) }).unwrap();
    assert_ne!(a.eps_draws, other.eps_draws);
}

#[test]
fn severity_counts_do_not_touch_efficacy_draws() {
    let with = find_builtin("pfizer").unwrap();
    let without = with.without_severity();
    let other = vaxinfer_core::TrialCounts {
        severe: Some(SevereCounts { vaccine: 8, placebo: 0 }),
        ..with.clone()
    };
    let cfg = config(5_000);
    let a = run_chains(&with, &cfg).unwrap();
    let b = run_chains(&without, &cfg).unwrap();
    let c = run_chains(&other, &cfg).unwrap();
    assert_eq!(a.eps_draws, b.eps_draws);
    assert_eq!(a.eps_draws, c.eps_draws);
    let sa = serde_json::to_string(&summarize(&a, 0.9).unwrap()).unwrap();
    let sb = serde_json::to_string(&summarize(&b, 0.9).unwrap()).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn published_tail_frequencies() {
    let cfg = McmcConfig::default();
    let pf = run_chains(&find_builtin("pfizer").unwrap(), &cfg).unwrap();
    let s = summarize(&pf, 0.9).unwrap();
    assert!((s.tail_prob - 0.974).abs() < 0.01, "{}", s.tail_prob);
    assert!(pf.diagnostics.eps.mcse < 0.001, "mcse {}", pf.diagnostics.eps.mcse);
    assert!(pf.converged());

    let sd = run_chains(&find_builtin("az-sdsd").unwrap(), &cfg).unwrap();
    assert!(summarize(&sd, 0.9).unwrap().tail_prob < 0.002);
}

#[test]
fn thinning_keeps_every_kth_draw() {
    let c = &builtin_dataset()[3];
    let full = run_chains(c, &config(3_001)).unwrap();
    let thin = run_chains(c, &McmcConfig { thin: 4, ..config(3_001) }).unwrap();
    assert_eq!(thin.eps_draws[0].len(), 501);
    for (i, x) in thin.eps_draws[0].iter().enumerate() {
        assert_eq!(*x, full.eps_draws[0][4 * i]);
    }
}
