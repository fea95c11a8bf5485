//! Synthetic regression problems shared by integration tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use pdesift::dictionary::{dictionary_terms, Dictionary, RegressionProblem};
use pdesift::GridPoint;

pub fn problem(matrix: DMatrix<f64>, target: DVector<f64>) -> RegressionProblem {
    let (n, k) = matrix.shape();
    let dictionary = Dictionary {
        matrix,
        terms: dictionary_terms(6, 6, false)[..k].to_vec(),
        row_index: (0..n).map(|t| GridPoint { t, x: 0, y: 0 }).collect(),
    };
    RegressionProblem::new(target, dictionary).unwrap()
}

/// Gaussian design with a mild common factor, one to three active terms of
/// magnitude 0.5..2, and noise at 5-30% of a unit coefficient.
pub fn random_problem(seed: u64, k: usize, n: usize) -> (RegressionProblem, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let d = DMatrix::from_fn(n, k, |i, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z + 0.3 * common[i]
    });
    let active = rng.random_range(1..=k.min(3));
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, k, active).into_vec();
    support.sort_unstable();
    let mut beta = DVector::zeros(k);
    for &i in &support {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        beta[i] = sign * rng.random_range(0.5..2.0);
    }
    let noise = rng.random_range(0.05..0.3);
    let y = &d * &beta
        + DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise * z
        });
    (problem(d, y), support)
}
