use std::time::Instant;

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{problem, random_problem};
use pdesift::baseline::StridgeConfig;
use pdesift::dictionary::RegressionProblem;
use pdesift::ssvb::{
    compute_elbo, discover, exact_conditional_mean, exact_posterior, init_inclusion_probs, vb_fit, vb_sweep,
    InitMethod, SsvbConfig, VbState,
};

fn fit(p: &RegressionProblem) -> (VbState, pdesift::ssvb::DiscoveredModel) {
    discover(p, &SsvbConfig::default(), &StridgeConfig::default(), 1).unwrap()
}

#[test]
fn three_term_problem_matches_enumeration() {
    let n = 60;
    let d = DMatrix::from_fn(n, 3, |i, j| ((i + 1) as f64 * (0.37 + 0.21 * j as f64)).sin());
    let y = d.column(1) * 1.5 + DVector::from_fn(n, |i, _| 0.05 * ((i * 7919 % 101) as f64 / 101.0 - 0.5));
    let p = problem(d, y);
    let cfg = SsvbConfig::default();
    let exact = exact_posterior(&p, &cfg).unwrap();
    assert_eq!(exact.map_support, vec![1]);
    let (_, model) = fit(&p);
    assert_eq!(model.support, vec![1]);
    for i in 0..3 {
        assert!(
            (model.pip[i] - exact.pip[i]).abs() < 0.05,
            "{} vs {}",
            model.pip,
            exact.pip
        );
    }
    let mean = exact_conditional_mean(&p, &exact.map_support, &cfg).unwrap();
    assert!((model.mu_hat[1] - mean[1]).abs() < 0.02 * mean[1].abs());
}

#[test]
fn random_problems_match_enumeration() {
    let cfg = SsvbConfig::default();
    let start = Instant::now();
    let mut worst_mean = 0.0f64;
    for seed in 0..20 {
        let k = 3 + (seed as usize % 6);
        let (p, truth) = random_problem(seed, k, 100);
        let exact = exact_posterior(&p, &cfg).unwrap();
        let (_, model) = fit(&p);
        assert_eq!(exact.map_support, truth, "seed {seed}");
        assert_eq!(model.support, exact.map_support, "seed {seed}");
        for i in 0..k {
            let gap = (model.pip[i] - exact.pip[i]).abs();
            // Mean-field inclusion probabilities settle at 0 or 1. Terms the
            // exact posterior leaves undecided are excluded, as by the
            // exact MAP pattern.
            if exact.pip[i] < 0.5 {
                assert!(
                    model.pip[i] < 0.05 || gap < 0.05,
                    "seed {seed}, term {i}: {} vs {}",
                    model.pip[i],
                    exact.pip[i]
                );
            } else {
                assert!(
                    gap < 0.05,
                    "seed {seed}, term {i}: {} vs {}",
                    model.pip[i],
                    exact.pip[i]
                );
            }
        }
        let mean = exact_conditional_mean(&p, &exact.map_support, &cfg).unwrap();
        for &i in &exact.map_support {
            worst_mean = worst_mean.max((model.mu_hat[i] - mean[i]).abs() / mean[i].abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_mean < 0.02, "largest relative mean gap {worst_mean}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
}

#[test]
fn excluded_terms_get_vanishing_inclusion_probability() {
    let cfg = SsvbConfig::default();
    for seed in 0..20 {
        let (p, truth) = random_problem(seed, 3 + (seed as usize % 6), 100);
        let (_, model) = fit(&p);
        for i in (0..p.ncols()).filter(|i| !truth.contains(i)) {
            assert!(model.pip[i] < cfg.p0, "seed {seed}, term {i}: {}", model.pip[i]);
        }
    }
}

fn elbo_increments(p: &RegressionProblem, w0: &DVector<f64>) -> Vec<f64> {
    let (_, model) = vb_fit(p, &SsvbConfig::default(), w0, 1).unwrap();
    model.elbo_trace.windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn elbo_never_decreases_from_any_start() {
    for seed in 0..10 {
        let (p, _) = random_problem(100 + seed, 6, 80);
        let k = p.ncols();
        let starts = [
            DVector::from_element(k, 0.5),
            DVector::from_element(k, 0.05),
            DVector::from_element(k, 0.95),
            init_inclusion_probs(&p, InitMethod::Ridge, &StridgeConfig::default()).unwrap(),
            init_inclusion_probs(&p, InitMethod::Stridge, &StridgeConfig::default()).unwrap(),
        ];
        for w0 in &starts {
            for (i, d) in elbo_increments(&p, w0).into_iter().enumerate() {
                assert!(d >= -1e-8, "seed {seed}, sweep {i}: ELBO fell by {}", -d);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elbo_is_monotone_on_arbitrary_designs(
        seed in 0u64..10_000,
        k in 2usize..8,
        w in 0.02f64..0.98,
    ) {
        let (p, _) = random_problem(seed, k, 50);
        for d in elbo_increments(&p, &DVector::from_element(k, w)) {
            prop_assert!(d >= -1e-8, "ELBO fell by {}", -d);
        }
    }
}

#[test]
fn sweep_reports_the_elbo_of_its_state() {
    let (p, _) = random_problem(7, 5, 100);
    let (scaled, _) = p.standardized();
    let cfg = SsvbConfig::default();
    let mut state = VbState::initial(&scaled, &cfg, &DVector::from_element(5, 0.5)).unwrap();
    for _ in 0..5 {
        state = vb_sweep(&state, &scaled, &cfg).unwrap();
        let last = *state.elbo_trace.last().unwrap();
        assert!((compute_elbo(&state, &scaled, &cfg) - last).abs() < 1e-9 * last.abs().max(1.0));
    }
}

#[test]
fn permuting_columns_permutes_the_posterior() {
    let (p, _) = random_problem(11, 6, 100);
    let perm = [3, 0, 5, 1, 4, 2];
    let permuted = problem(p.dictionary.matrix.select_columns(&perm), p.target.clone());
    let cfg = SsvbConfig::default();
    let w0 = DVector::from_element(6, 0.5);
    let (_, a) = vb_fit(&p, &cfg, &w0, 1).unwrap();
    let (_, b) = vb_fit(&permuted, &cfg, &w0, 1).unwrap();
    for (j, &i) in perm.iter().enumerate() {
        assert!((a.pip[i] - b.pip[j]).abs() < 1e-6, "pip {i}");
        assert!(
            (a.mu_hat[i] - b.mu_hat[j]).abs() < 1e-6 * a.mu_hat[i].abs().max(1.0),
            "mean {i}"
        );
    }
}

#[test]
fn repeated_fits_are_identical() {
    let (p, _) = random_problem(5, 8, 100);
    let (sa, a) = fit(&p);
    let (sb, b) = fit(&p);
    assert_eq!(sa, sb);
    assert_eq!(a, b);
}

#[test]
fn posterior_covariance_is_symmetric_positive_definite() {
    for seed in 0..10 {
        let (p, _) = random_problem(200 + seed, 8, 100);
        let (state, model) = fit(&p);
        let block = model
            .sigma_hat
            .select_rows(&model.support)
            .select_columns(&model.support);
        for s in [&state.sigma, &block] {
            let asym = (s - s.transpose()).amax();
            assert!(asym <= 1e-10 * s.amax(), "asymmetry {asym}");
            let sym = (s + s.transpose()) * 0.5;
            assert!(
                sym.cholesky().is_some(),
                "seed {seed}: covariance is not positive definite"
            );
        }
    }
}

#[test]
fn noise_shape_has_closed_form() {
    for (n, k) in [(40, 3), (100, 8), (73, 5)] {
        let (p, _) = random_problem(n as u64, k, n);
        let cfg = SsvbConfig::default();
        let (state, _) = vb_fit(&p, &cfg, &DVector::from_element(k, 0.5), 1).unwrap();
        assert_eq!(state.a, cfg.a_sigma + n as f64 / 2.0 + k as f64 / 2.0);
    }
}
