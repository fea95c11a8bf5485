use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::solvers::{simulate_model, PdeModel, SystemSpec};
use crate::ssvb::DiscoveredModel;
use crate::terms::BasisTerm;

/// Relative L2 error `|c - c_true| / |c_true|` over the union of the
/// identified and the true terms.
///
/// `identified` holds one coefficient per entry of `terms`; `truth` is keyed
/// by term label and every label must name a term of `terms`.
pub fn coefficient_error_of(terms: &[BasisTerm], identified: &DVector<f64>, truth: &[(String, f64)]) -> Result<f64> {
    let mut target = DVector::zeros(terms.len());
    for (label, value) in truth {
        let term: BasisTerm = label.parse().map_err(|_| Error::UnresolvableLabel(label.clone()))?;
        let i = terms
            .iter()
            .position(|t| *t == term)
            .ok_or_else(|| Error::UnresolvableLabel(label.clone()))?;
        target[i] = *value;
    }
    let norm = target.norm();
    if norm == 0.0 {
        return Err(Error::Config("true coefficients are all zero".into()));
    }
    Ok((identified - &target).norm() / norm)
}

/// [`coefficient_error_of`] for a variational fit, using its posterior mean.
pub fn coefficient_error(model: &DiscoveredModel, truth: &[(String, f64)]) -> Result<f64> {
    coefficient_error_of(&model.terms, &model.mu_hat, truth)
}

/// Labelled coefficients of a reference model.
pub fn truth_labels(model: &PdeModel) -> Vec<(String, f64)> {
    model.terms.iter().map(|(t, c)| (t.label(), *c)).collect()
}

/// Point-wise ensemble statistics of resimulated posterior samples.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub mean: Field,
    pub std: Field,
    /// Samples whose simulation diverged or violated a stability limit.
    pub rejected: usize,
}

/// Monte Carlo predictive distribution of an identified model.
///
/// Coefficient vectors are drawn from the Gaussian posterior restricted to
/// the selected terms and each draw is simulated with the grid, initial
/// condition and boundary of `spec`. Draws that blow up are rejected; more
/// than half rejected is an error.
pub fn predict_with_uncertainty(
    model: &DiscoveredModel,
    spec: &SystemSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Prediction> {
    if n_samples == 0 {
        return Err(Error::Config("at least one posterior sample is required".into()));
    }
    let support = &model.support;
    if support.is_empty() {
        return Err(Error::UnsupportedCombination(
            "the identified model has no terms".into(),
        ));
    }
    let s = support.len();
    let mean = DVector::from_iterator(s, support.iter().map(|&i| model.mu_hat[i]));
    let cov = DMatrix::from_fn(s, s, |a, b| {
        let (i, j) = (support[a], support[b]);
        0.5 * (model.sigma_hat[(i, j)] + model.sigma_hat[(j, i)])
    });
    let factor = covariance_factor(&cov);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<DVector<f64>> = (0..n_samples)
        .map(|_| {
            let z = DVector::from_fn(s, |_, _| StandardNormal.sample(&mut rng));
            &mean + &factor * z
        })
        .collect();
    let runs: Vec<Result<Option<Field>>> = draws
        .par_iter()
        .map(|c| {
            let terms = support
                .iter()
                .zip(c.iter())
                .map(|(&i, &v)| (model.terms[i], v))
                .collect();
            let pde = PdeModel::new(model.time_order, terms)?;
            match simulate_model(&pde, spec) {
                Ok(f) => Ok(Some(f)),
                Err(Error::NumericalBreakdown(msg)) => {
                    log::debug!("rejected posterior sample: {msg}");
                    Ok(None)
                }
                Err(e @ Error::StabilityViolation { .. }) => {
                    log::debug!("rejected posterior sample: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut rejected = 0;
    let mut count = 0usize;
    let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut grid = None;
    for run in runs {
        let Some(field) = run? else {
            rejected += 1;
            continue;
        };
        count += 1;
        let (m, m2) = acc.get_or_insert_with(|| (vec![0.0; field.values().len()], vec![0.0; field.values().len()]));
        for ((mi, m2i), &x) in m.iter_mut().zip(m2.iter_mut()).zip(field.values()) {
            let delta = x - *mi;
            *mi += delta / count as f64;
            *m2i += delta * (x - *mi);
        }
        grid.get_or_insert_with(|| field.grid().clone());
    }
    if 2 * rejected > n_samples {
        return Err(Error::UnstableSample {
            rejected,
            total: n_samples,
        });
    }
    let (m, m2) = acc.expect("at least half of the samples were accepted");
    let grid = grid.expect("grid of an accepted sample");
    let std = m2.iter().map(|v| (v / count as f64).max(0.0).sqrt()).collect();
    Ok(Prediction {
        mean: Field::new(grid.clone(), m)?,
        std: Field::new(grid, std)?,
        rejected,
    })
}

/// `L` with `L L' = cov`, tolerant of singular or slightly indefinite input.
fn covariance_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * DMatrix::from_diagonal(&root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::DerivPattern;

    fn terms() -> Vec<BasisTerm> {
        vec![
            BasisTerm::new(DerivPattern::x(1), 1),
            BasisTerm::new(DerivPattern::x(3), 0),
            BasisTerm::new(DerivPattern::x(2), 0),
        ]
    }

    #[test]
    fn exact_coefficients_have_zero_error() {
        let truth = vec![("u*u_x".to_string(), -6.0), ("u_xxx".to_string(), -1.0)];
        let c = DVector::from_vec(vec![-6.0, -1.0, 0.0]);
        assert_eq!(coefficient_error_of(&terms(), &c, &truth).unwrap(), 0.0);
    }

    #[test]
    fn relative_error_over_union() {
        let truth = vec![("u*u_x".to_string(), -6.0), ("u_xxx".to_string(), -1.0)];
        let c = DVector::from_vec(vec![-5.908, -1.05, 0.0]);
        let e = coefficient_error_of(&terms(), &c, &truth).unwrap();
        let expected = (0.092f64.powi(2) + 0.05f64.powi(2)).sqrt() / 37f64.sqrt();
        assert!((e - expected).abs() < 1e-12);
        assert!((e - 0.0172).abs() < 1e-4);
        let spurious = DVector::from_vec(vec![-6.0, -1.0, 0.5]);
        let e = coefficient_error_of(&terms(), &spurious, &truth).unwrap();
        assert!((e - 0.5 / 37f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_labels_are_reported() {
        let c = DVector::zeros(3);
        let truth = vec![("u^2*u_xxxx".to_string(), 1.0)];
        assert!(matches!(
            coefficient_error_of(&terms(), &c, &truth),
            Err(Error::UnresolvableLabel(_))
        ));
        let truth = vec![("not a term".to_string(), 1.0)];
        assert!(matches!(
            coefficient_error_of(&terms(), &c, &truth),
            Err(Error::UnresolvableLabel(_))
        ));
    }

    #[test]
    fn factor_reproduces_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = covariance_factor(&cov);
        assert!((&l * l.transpose() - &cov).amax() < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = covariance_factor(&singular);
        assert!((&l * l.transpose() - &singular).amax() < 1e-12);
    }
}
