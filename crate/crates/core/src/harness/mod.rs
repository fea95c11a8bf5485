//! End-to-end experiments: simulate a benchmark system, corrupt it with
//! noise, build the regression problem, fit the variational model and the
//! STRidge baseline, and tabulate how well each recovers the truth.

mod config;
mod predict;
mod report;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::baseline::{false_negative_rate, false_positive_rate, stridge};
use crate::dictionary::{build_problem, RegressionProblem};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::solvers::{add_noise, simulate, NoiseSpec, PdeModel};
use crate::ssvb::discover;

pub use config::{ConfigFile, DerivConfig, DerivPair, DictConfig, ExperimentConfig, FitConfig};
pub use predict::{coefficient_error, coefficient_error_of, predict_with_uncertainty, truth_labels, Prediction};
pub use report::{Method, Report, ReportRow, RunArtifacts};

/// Runs every `(noise, seed)` cell of `config`.
///
/// Only an invalid configuration is an error; failures inside a cell become
/// rows with an error status.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    run_experiments(std::slice::from_ref(config), config.workers)
}

/// Runs several experiments on one pool of `workers` threads (0 means every
/// core). Rows come back in configuration, noise, seed, method order no
/// matter how the cells were scheduled.
pub fn run_experiments(configs: &[ExperimentConfig], workers: usize) -> Result<Report> {
    for c in configs {
        c.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let runs = pool.install(|| {
        let clean: Vec<Result<Arc<Field>>> = configs.par_iter().map(|c| simulate(&c.system).map(Arc::new)).collect();
        let cells: Vec<(usize, f64, u64)> = configs
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                c.noise_levels
                    .iter()
                    .flat_map(move |&n| c.seeds.iter().map(move |&s| (i, n, s)))
            })
            .collect();
        cells
            .par_iter()
            .map(|&(i, noise, seed)| {
                let c = &configs[i];
                match &clean[i] {
                    Ok(field) => run_cell(c, field, noise, seed),
                    Err(e) => RunArtifacts::failed(c, noise, seed, &format!("simulation failed: {e}")),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(Report { runs })
}

fn run_cell(config: &ExperimentConfig, clean: &Field, noise: f64, seed: u64) -> RunArtifacts {
    let prepared = (|| -> Result<(RegressionProblem, PdeModel)> {
        let field = add_noise(clean, &NoiseSpec { level: noise, seed })?;
        let problem = build_problem(&field, &config.problem_settings(noise, seed))?;
        Ok((problem, config.system.true_model()?))
    })();
    let (problem, truth) = match prepared {
        Ok(p) => p,
        Err(e) => return RunArtifacts::failed(config, noise, seed, &e.to_string()),
    };
    let truth_idx: Option<Vec<usize>> = truth
        .terms
        .iter()
        .map(|(t, _)| problem.dictionary.position(t))
        .collect();
    let Some(truth_idx) = truth_idx else {
        return RunArtifacts::failed(config, noise, seed, "the true terms are not all in the dictionary");
    };
    let labels = truth_labels(&truth);
    let k = problem.ncols();
    let time = |start: Instant| config.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let mut artifacts = RunArtifacts::new(config, noise, seed);

    let start = Instant::now();
    let vb = discover(&problem, &config.vb, &config.stridge, config.system.kind.time_order()).and_then(|(_, model)| {
        let err = coefficient_error(&model, &labels)?;
        Ok((model, err))
    });
    let vb_time = time(start);
    artifacts.rows.push(match vb {
        Ok((model, err)) => {
            let row = ReportRow {
                support: model.support_labels(),
                coeffs: model
                    .coefficients()
                    .iter()
                    .map(|(t, m, s)| (t.label(), *m, Some(*s)))
                    .collect(),
                fpr: Some(false_positive_rate(&model.support, &truth_idx, k)),
                fnr: Some(false_negative_rate(&model.support, &truth_idx)),
                coeff_rel_err: Some(err),
                sweeps: Some(model.sweeps),
                wall_ms: vb_time,
                status: if model.converged { "ok" } else { "max_sweeps" }.into(),
                ..ReportRow::blank(config, noise, seed, Method::Vb)
            };
            artifacts.model = Some(model.to_export());
            row
        }
        Err(e) => ReportRow::error(config, noise, seed, Method::Vb, &e.to_string()),
    });

    let start = Instant::now();
    let st = stridge(&problem, &config.stridge).and_then(|fit| {
        let err = coefficient_error_of(&problem.dictionary.terms, &fit.coefficients, &labels)?;
        Ok((fit, err))
    });
    let st_time = time(start);
    artifacts.rows.push(match st {
        Ok((fit, err)) => ReportRow {
            support: fit
                .support
                .iter()
                .map(|&i| problem.dictionary.terms[i].label())
                .collect(),
            coeffs: fit
                .support
                .iter()
                .map(|&i| (problem.dictionary.terms[i].label(), fit.coefficients[i], None))
                .collect(),
            fpr: Some(false_positive_rate(&fit.support, &truth_idx, k)),
            fnr: Some(false_negative_rate(&fit.support, &truth_idx)),
            coeff_rel_err: Some(err),
            wall_ms: st_time,
            status: "ok".into(),
            ..ReportRow::blank(config, noise, seed, Method::Stridge)
        },
        Err(e) => ReportRow::error(config, noise, seed, Method::Stridge, &e.to_string()),
    });
    artifacts
}
