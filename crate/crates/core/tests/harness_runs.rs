//! Statistical behaviour of full harness runs at moderate sizes.

use srvar_core::harness::{self, DatasetSpec, ExperimentConfig, SweepGrid};
use srvar_core::{Algorithm, SummationScheme};

fn config(lo: f64, hi: f64, n: usize, algorithms: Vec<Algorithm>) -> ExperimentConfig {
    ExperimentConfig::new(DatasetSpec::uniform(lo, hi, n, 31), algorithms, 77)
}

#[test]
fn pairwise_error_grows_like_sqrt_log_n() {
    let cfg = config(
        0.0,
        1.0,
        1 << 10,
        vec![Algorithm::Sum(SummationScheme::Pairwise)],
    );
    let out = harness::coverage_sweep(&cfg, &SweepGrid::N(vec![1 << 10, 1 << 20])).unwrap();
    let e: Vec<f64> = out
        .summaries
        .iter()
        .map(|s| s.trial_rel_error_mean.unwrap())
        .collect();
    let ratio = e[1] / e[0];
    assert!(ratio <= 2f64.sqrt() * 1.5, "ratio {ratio}");
}

#[test]
fn averaging_trials_reduces_error() {
    let mut cfg = config(
        0.0,
        1.0,
        2000,
        vec![Algorithm::textbook(SummationScheme::Recursive)],
    );
    cfg.repetitions = 10;
    let few = harness::run_experiment(&cfg).unwrap().summaries[0]
        .mean_rel_error
        .unwrap();
    cfg.repetitions = 1000;
    let many = harness::run_experiment(&cfg).unwrap().summaries[0]
        .mean_rel_error
        .unwrap();
    assert!(many < few, "{many} vs {few}");
}

#[test]
fn centred_data_shows_no_separation() {
    let algs = vec![
        Algorithm::textbook(SummationScheme::Recursive),
        Algorithm::two_pass(SummationScheme::Recursive),
    ];
    let out = harness::run_experiment(&config(-1.0, 1.0, 100_000, algs)).unwrap();
    let (a, b) = (
        out.summaries[0].trial_rel_error_mean.unwrap(),
        out.summaries[1].trial_rel_error_mean.unwrap(),
    );
    assert!(a / b < 10.0 && b / a < 10.0, "{a} vs {b}");
}

#[test]
fn sr_avoids_stagnation_for_large_n() {
    let cfg = config(1024.0, 1025.0, 10_000, vec![]);
    for s in harness::stagnation_demo(&cfg, &[10_000, 100_000]).unwrap() {
        if s.algorithm == Algorithm::textbook(SummationScheme::Recursive) {
            let (sr, rn) = (s.mean_rel_error.unwrap(), s.rn_rel_error.unwrap());
            assert!(sr < rn, "n = {}: SR {sr} vs RN {rn}", s.n);
        }
    }
}

#[test]
fn zero_variance_suppresses_variance_bounds_only() {
    let algs = vec![
        Algorithm::Sum(SummationScheme::Recursive),
        Algorithm::textbook(SummationScheme::Recursive),
    ];
    // one value: nonzero sum, zero variance
    let cfg = config(0.25, 0.25 + 1e-9, 1, algs);
    let out = harness::run_experiment(&cfg).unwrap();
    assert!(!out.summaries[0].bounds.is_empty());
    assert!(out.summaries[1].bounds.is_empty());
    assert!(out.summaries[1].flags.iter().any(|f| f == "exact_zero"));
}
