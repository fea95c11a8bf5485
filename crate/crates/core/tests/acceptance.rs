//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! never aborts on a failed check, so the full picture is always reported.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use pdesift::baseline::StridgeConfig;
use pdesift::differentiation::{fd_derivative, poly_derivative, DerivSpec};
use pdesift::harness::{run_experiments, ExperimentConfig, Method, Report, ReportRow};
use pdesift::solvers::{add_noise, simulate, InitialCondition, NoiseSpec, Soliton, SystemKind, SystemSpec};
use pdesift::ssvb::{discover, exact_conditional_mean, exact_posterior, SsvbConfig};
use pdesift::terms::BasisTerm;
use pdesift::{Axis, Field, GridSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: usize, title: &str, outcome: Outcome) -> bool {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} - {title}: {}", outcome.detail);
    outcome.pass
}

const NOISY_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn vb_rows<'a>(report: &'a Report, system: &'a str, noise: f64) -> impl Iterator<Item = &'a ReportRow> {
    report
        .rows()
        .filter(move |r| r.system == system && r.noise == noise && r.method == Method::Vb)
}

fn clean_runs() -> (Report, BTreeMap<SystemKind, f64>) {
    let mut seconds = BTreeMap::new();
    let mut runs = Vec::new();
    for kind in SystemKind::ALL {
        let mut config = ExperimentConfig::benchmark(kind);
        config.noise_levels = vec![0.0];
        let start = Instant::now();
        let report = run_experiments(&[config], 1).expect("clean benchmark run");
        seconds.insert(kind, start.elapsed().as_secs_f64());
        runs.extend(report.runs);
    }
    (Report { runs }, seconds)
}

fn noisy_runs() -> Report {
    let configs: Vec<_> = SystemKind::ALL
        .into_iter()
        .map(|kind| {
            let mut c = ExperimentConfig::benchmark(kind);
            c.noise_levels = vec![0.01, 0.02, 0.05];
            c.seeds = NOISY_SEEDS.to_vec();
            c
        })
        .collect();
    run_experiments(&configs, 4).expect("noisy benchmark run")
}

fn exact_support(clean: &Report, seconds: &BTreeMap<SystemKind, f64>) -> Outcome {
    let mut failures = Vec::new();
    for kind in SystemKind::ALL {
        let name = kind.to_string();
        let row = vb_rows(clean, &name, 0.0).next().expect("clean row");
        let secs = seconds[&kind];
        if !row.is_exact() || secs >= 60.0 {
            failures.push(format!("{name} support [{}] in {secs:.1}s", row.support.join(" ")));
        }
    }
    let slowest = seconds.values().cloned().fold(0.0, f64::max);
    if failures.is_empty() {
        Outcome::new(true, format!("all six systems exact, slowest {slowest:.1}s"))
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn coefficient_accuracy(clean: &Report) -> Outcome {
    let mut worst = Vec::new();
    let mut pass = true;
    for kind in SystemKind::ALL {
        let tolerance = match kind {
            SystemKind::Heat1d | SystemKind::Heat2d | SystemKind::Wave1d => 0.005,
            SystemKind::Burgers => 0.02,
            SystemKind::Kdv | SystemKind::Ks => 0.10,
        };
        let truth = ExperimentConfig::benchmark(kind).system.true_model().unwrap();
        let name = kind.to_string();
        let row = vb_rows(clean, &name, 0.0).next().expect("clean row");
        let mut largest = 0.0f64;
        for (term, value) in &truth.terms {
            let found = row
                .coeffs
                .iter()
                .find(|(label, _, _)| label.parse::<BasisTerm>().ok().as_ref() == Some(term))
                .map(|(_, c, _)| *c);
            largest = largest.max(match found {
                Some(c) => (c - value).abs() / value.abs(),
                None => f64::INFINITY,
            });
        }
        pass &= largest <= tolerance;
        worst.push(format!("{name} {:.3}% (tol {}%)", 100.0 * largest, 100.0 * tolerance));
    }
    Outcome::new(pass, worst.join(", "))
}

fn noisy_support(noisy: &Report) -> Outcome {
    let mut failures = Vec::new();
    for kind in SystemKind::ALL {
        let name = kind.to_string();
        for noise in [0.01, 0.02] {
            let row = vb_rows(noisy, &name, noise).find(|r| r.seed == 0).expect("seed 0 row");
            if row.fpr != Some(0.0) {
                failures.push(format!("{name}@{noise} fpr {:?}", row.fpr));
            }
        }
        let exact = vb_rows(noisy, &name, 0.05).filter(|r| r.is_exact()).count();
        if exact < 3 {
            failures.push(format!("{name}@0.05 exact {exact}/5"));
        }
    }
    if failures.is_empty() {
        Outcome::new(true, "zero false positives at 1% and 2%, >= 3/5 exact at 5%")
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn mean_fpr(report: &Report, system: &str, noise: f64, method: Method) -> Option<f64> {
    let values: Vec<f64> = report
        .rows()
        .filter(|r| r.system == system && r.noise == noise && r.method == method)
        .filter_map(|r| r.fpr)
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn baseline_comparison(clean: &Report, noisy: &Report) -> Outcome {
    let mut failures = Vec::new();
    for kind in SystemKind::ALL {
        let name = kind.to_string();
        for noise in [0.01, 0.02, 0.05] {
            let vb = mean_fpr(noisy, &name, noise, Method::Vb);
            let st = mean_fpr(noisy, &name, noise, Method::Stridge);
            match (vb, st) {
                (Some(v), Some(s)) if s >= v => {}
                (v, s) => failures.push(format!("{name}@{noise} stridge {s:?} < vb {v:?}")),
            }
        }
    }
    let heat = mean_fpr(clean, "heat1d", 0.0, Method::Stridge).unwrap_or(0.0);
    if heat < 1.0 / 49.0 {
        failures.push(format!("clean heat1d stridge fpr {heat}"));
    }
    if failures.is_empty() {
        Outcome::new(true, "baseline false-positive rate never below the variational one")
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn enumeration_agreement() -> Outcome {
    let cfg = SsvbConfig::default();
    let start = Instant::now();
    let (mut pip_gap, mut mean_gap) = (0.0f64, 0.0f64);
    for seed in 0..20 {
        let k = 3 + (seed as usize % 6);
        let (p, _) = common::random_problem(seed, k, 100);
        let exact = exact_posterior(&p, &cfg).unwrap();
        let (_, model) = discover(&p, &cfg, &StridgeConfig::default(), 1).unwrap();
        for i in 0..k {
            pip_gap = pip_gap.max((model.pip[i] - exact.pip[i]).abs());
        }
        let mean = exact_conditional_mean(&p, &exact.map_support, &cfg).unwrap();
        for &i in &exact.map_support {
            mean_gap = mean_gap.max((model.mu_hat[i] - mean[i]).abs() / mean[i].abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        pip_gap < 0.05 && mean_gap < 0.02 && secs < 10.0,
        format!(
            "max PIP gap {pip_gap:.3}, max mean gap {:.3}%, {secs:.2}s",
            100.0 * mean_gap
        ),
    )
}

fn elbo_monotone(clean: &Report, noisy: &Report) -> Outcome {
    let mut worst = 0.0f64;
    let mut fits = 0;
    let mut unconverged = Vec::new();
    for run in clean.runs.iter().chain(&noisy.runs) {
        let Some(model) = &run.model else {
            unconverged.push(format!("{} noise {} seed {} failed", run.system, run.noise, run.seed));
            continue;
        };
        fits += 1;
        for w in model.elbo_trace.windows(2) {
            worst = worst.min(w[1] - w[0]);
        }
        if run.noise == 0.0 && !model.converged {
            unconverged.push(format!("{} clean did not converge", run.system));
        }
    }
    Outcome::new(
        worst >= -1e-8 && unconverged.is_empty(),
        format!("{fits} fits, most negative increment {worst:e}{}", {
            if unconverged.is_empty() {
                String::new()
            } else {
                format!("; {}", unconverged.join("; "))
            }
        }),
    )
}

fn solver_checks() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut heat = SystemSpec::preset(SystemKind::Heat1d);
    heat.grid.dt = 6.6e-6;
    heat.grid.nt = (0.06 / heat.grid.dt).round() as usize;
    let f = simulate(&heat).unwrap();
    let n = (0.05 / heat.grid.dt).round() as usize;
    let decay = (-2.0 * PI * PI * f.grid().t(n)).exp();
    let heat_err = (0..f.grid().nx)
        .map(|i| (f.at(n, i, 0) - decay * (PI * f.grid().x(i)).sin()).abs())
        .fold(0.0, f64::max)
        / decay;
    pass &= heat_err < 1e-3;
    notes.push(format!("heat1d rel err {heat_err:.1e}"));

    let wave = simulate(&SystemSpec::preset(SystemKind::Wave1d)).unwrap();
    let g = wave.grid();
    let mut wave_err = 0.0f64;
    for n in 0..g.nt {
        for i in 0..g.nx {
            wave_err = wave_err.max((wave.at(n, i, 0) - (PI * g.x(i)).sin() * (PI * g.t(n)).cos()).abs());
        }
    }
    pass &= wave_err < 1e-3;
    notes.push(format!("wave max err {wave_err:.1e}"));

    let mut kdv = SystemSpec::preset(SystemKind::Kdv);
    kdv.initial_condition = InitialCondition::Solitons {
        pulses: vec![Soliton {
            speed: 1.0,
            position: -10.0,
        }],
    };
    let f = simulate(&kdv).unwrap();
    let peak = |n: usize| f.snapshot(n).iter().cloned().fold(f64::MIN, f64::max);
    let a0 = peak(0);
    let drift = (0..f.grid().nt).map(|n| (peak(n) - a0).abs() / a0).fold(0.0, f64::max);
    pass &= drift < 0.01;
    notes.push(format!("kdv amplitude drift {:.2}%", 100.0 * drift));

    Outcome::new(pass, notes.join(", "))
}

fn line(nx: usize, h: f64, f: impl Fn(f64) -> f64) -> Field {
    Field::from_fn(GridSpec::new_1d(nx, h, 0.0, 3, 0.1, 0.0), |_, x, _| f(x)).unwrap()
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    (sum / count as f64).sqrt()
}

fn interior_error(field: &Field, margin: usize, exact: impl Fn(f64) -> f64) -> impl Iterator<Item = f64> {
    let g = field.grid();
    let mut errors = Vec::new();
    for n in 0..g.nt {
        for i in margin..g.nx - margin {
            errors.push(field.at(n, i, 0) - exact(g.x(i)));
        }
    }
    errors.into_iter()
}

fn differentiation_checks() -> Outcome {
    let mut notes = Vec::new();

    let h = 0.1;
    let cubic = line(40, h, |x| 0.5 * x.powi(4) - x.powi(3) + 2.0 * x - 1.0);
    let (d2, _) = poly_derivative(&cubic, &DerivSpec::poly(Axis::X, 2, 4, 9)).unwrap();
    let poly_err = interior_error(&d2, 0, |x| 6.0 * x * x - 6.0 * x)
        .map(f64::abs)
        .fold(0.0, f64::max);
    let exact_ok = poly_err < 1e-8;
    notes.push(format!("quartic u_xx err {poly_err:.1e}"));

    let h = 0.005;
    let clean = line(201, h, |x| (2.0 * PI * x).sin());
    let noisy = add_noise(&clean, &NoiseSpec { level: 0.02, seed: 7 }).unwrap();
    let slope = |x: f64| 2.0 * PI * (2.0 * PI * x).cos();
    let fd = fd_derivative(&noisy, &DerivSpec::fd(Axis::X, 1)).unwrap();
    let (poly, _) = poly_derivative(&noisy, &DerivSpec::poly(Axis::X, 1, 4, 11)).unwrap();
    let (fd_rms, poly_rms) = (rms(interior_error(&fd, 5, slope)), rms(interior_error(&poly, 5, slope)));
    let smoothing_ok = poly_rms < fd_rms;
    notes.push(format!("noisy sine rmse poly {poly_rms:.3} vs fd {fd_rms:.3}"));

    let (h, eps) = (0.01, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = GridSpec::new_1d(2001, h, 0.0, 3, 0.1, 0.0);
    let values = (0..grid.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            eps * z
        })
        .collect();
    let noise = Field::new(grid, values).unwrap();
    let mut previous = eps;
    let mut ratios = Vec::new();
    let mut amplification_ok = true;
    for order in 1..=4u8 {
        let d = fd_derivative(&noise, &DerivSpec::fd(Axis::X, order)).unwrap();
        let current = rms(interior_error(&d, 3, |_| 0.0));
        let ratio = current * h / previous;
        amplification_ok &= ratio > 0.2 && ratio < 5.0;
        ratios.push(format!("{}->{order}: {ratio:.2}/h", order - 1));
        previous = current;
    }
    notes.push(format!("noise gain {}", ratios.join(" ")));

    Outcome::new(exact_ok && smoothing_ok && amplification_ok, notes.join(", "))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let result = Command::new(env!("CARGO_BIN_EXE_pdesift"))
            .args(["benchmark", "--workers", "4", "--out"])
            .arg(&out)
            .output();
        match result {
            Ok(o) if o.status.code().is_some_and(|c| c == 0 || c == 2) => {}
            Ok(o) => return Outcome::new(false, format!("benchmark exited with {:?}", o.status.code())),
            Err(e) => return Outcome::new(false, format!("could not run benchmark: {e}")),
        }
        match fs::read(out.join("report.csv")) {
            Ok(bytes) => reports.push(bytes),
            Err(e) => return Outcome::new(false, format!("missing report: {e}")),
        }
    }
    Outcome::new(
        reports[0] == reports[1],
        format!(
            "two runs, {} bytes each, identical: {}",
            reports[0].len(),
            reports[0] == reports[1]
        ),
    )
}

fn main() {
    let (clean, seconds) = clean_runs();
    let noisy = noisy_runs();
    let results = [
        report(1, "exact support on clean data", exact_support(&clean, &seconds)),
        report(2, "clean coefficient accuracy", coefficient_accuracy(&clean)),
        report(3, "support under noise", noisy_support(&noisy)),
        report(
            4,
            "false positives versus sequential thresholding",
            baseline_comparison(&clean, &noisy),
        ),
        report(5, "agreement with exact enumeration", enumeration_agreement()),
        report(6, "ELBO monotonicity and convergence", elbo_monotone(&clean, &noisy)),
        report(7, "solver accuracy", solver_checks()),
        report(8, "differentiation", differentiation_checks()),
        report(9, "benchmark reproducibility", cli_determinism()),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} criteria passed", results.len());
}
