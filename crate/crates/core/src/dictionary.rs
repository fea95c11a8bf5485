//! Regression problems `Y = D Phi + e` assembled from a field.
//!
//! Columns are `u^q * D^d u` evaluated point-wise at the retained grid points.
//! Rows within the trim margin of any boundary are dropped, and rows can be
//! subsampled before any column is evaluated so large grids never need the
//! full design matrix in memory.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::differentiation::{DerivMethod, PointDerivative};
use crate::error::{Error, Result};
use crate::field::{Axis, Field, GridPoint};
use crate::terms::{BasisTerm, DerivPattern};

/// Snapshots dropped at each end of the time axis at minimum.
pub const MIN_TIME_TRIM: usize = 2;

/// Canonical term order: polynomial power outer, derivative inner.
///
/// 1D derivative terms are `u_x ..= u_x^max_deriv`; 2D interleaves the pure
/// `x` and `y` derivatives of each order.
pub fn dictionary_terms(max_deriv: u8, max_poly: u32, two_d: bool) -> Vec<BasisTerm> {
    let mut derivs = vec![DerivPattern::NONE];
    for d in 1..=max_deriv {
        derivs.push(DerivPattern::x(d));
        if two_d {
            derivs.push(DerivPattern::y(d));
        }
    }
    (0..=max_poly)
        .flat_map(|q| derivs.iter().map(move |&d| BasisTerm::new(d, q)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub matrix: DMatrix<f64>,
    pub terms: Vec<BasisTerm>,
    pub row_index: Vec<GridPoint>,
}

impl Dictionary {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(BasisTerm::label).collect()
    }

    pub fn position(&self, term: &BasisTerm) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dictionary {
        Dictionary {
            matrix: self.matrix.select_rows(rows),
            terms: self.terms.clone(),
            row_index: rows.iter().map(|&r| self.row_index[r]).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dictionary {
        Dictionary {
            matrix: self.matrix.select_columns(cols),
            terms: cols.iter().map(|&c| self.terms[c]).collect(),
            row_index: self.row_index.clone(),
        }
    }

    /// Debug export: a header of term labels, then one line per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.labels())?;
        for r in 0..self.nrows() {
            out.write_record(self.matrix.row(r).iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub target: DVector<f64>,
    pub dictionary: Dictionary,
}

impl RegressionProblem {
    pub fn new(target: DVector<f64>, dictionary: Dictionary) -> Result<Self> {
        if target.len() != dictionary.nrows() {
            return Err(Error::InvalidField(format!(
                "target has {} rows, dictionary {}",
                target.len(),
                dictionary.nrows()
            )));
        }
        Ok(RegressionProblem { target, dictionary })
    }

    pub fn nrows(&self) -> usize {
        self.target.len()
    }

    pub fn ncols(&self) -> usize {
        self.dictionary.ncols()
    }

    pub fn select_columns(&self, cols: &[usize]) -> RegressionProblem {
        RegressionProblem {
            target: self.target.clone(),
            dictionary: self.dictionary.select_columns(cols),
        }
    }

    /// Columns and target rescaled to unit root-mean-square.
    pub fn standardized(&self) -> (RegressionProblem, Scaling) {
        let n = self.nrows().max(1) as f64;
        let rms = |v: f64| {
            let r = (v / n).sqrt();
            if r > 0.0 && r.is_finite() {
                r
            } else {
                1.0
            }
        };
        let columns: Vec<f64> = self
            .dictionary
            .matrix
            .column_iter()
            .map(|c| rms(c.norm_squared()))
            .collect();
        let target_scale = rms(self.target.norm_squared());
        let mut matrix = self.dictionary.matrix.clone();
        for (j, mut col) in matrix.column_iter_mut().enumerate() {
            col /= columns[j];
        }
        let scaled = RegressionProblem {
            target: &self.target / target_scale,
            dictionary: Dictionary {
                matrix,
                terms: self.dictionary.terms.clone(),
                row_index: self.dictionary.row_index.clone(),
            },
        };
        (
            scaled,
            Scaling {
                columns,
                target: target_scale,
            },
        )
    }
}

/// Column and target scale factors applied by [`RegressionProblem::standardized`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub columns: Vec<f64>,
    pub target: f64,
}

impl Scaling {
    /// Maps a coefficient fitted on scaled data back to original units.
    pub fn unscale_coefficient(&self, j: usize, beta: f64) -> f64 {
        beta * self.target / self.columns[j]
    }

    pub fn unscale_vector(&self, beta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            beta.len(),
            beta.iter().enumerate().map(|(j, b)| self.unscale_coefficient(j, *b)),
        )
    }

    pub fn unscale_covariance(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        let f: Vec<f64> = self.columns.iter().map(|c| self.target / c).collect();
        DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] * f[i] * f[j])
    }
}

/// How derivatives and rows are chosen when assembling a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSettings {
    pub max_deriv: u8,
    pub max_poly: u32,
    /// Estimator for spatial derivatives.
    pub method: DerivMethod,
    /// Estimator for the time derivative target; defaults to `method`.
    #[serde(default)]
    pub time_method: Option<DerivMethod>,
    /// Points dropped at each spatial boundary; defaults to the stencil margin.
    #[serde(default)]
    pub trim: Option<usize>,
    /// Snapshots dropped at each end of the record.
    #[serde(default)]
    pub time_trim: Option<usize>,
    /// Keep a uniform random subset of this many rows.
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// 1 for `u_t`, 2 for `u_tt`.
    #[serde(default = "one")]
    pub time_order: u8,
}

fn one() -> u8 {
    1
}

impl ProblemSettings {
    pub fn new(max_deriv: u8, max_poly: u32, method: DerivMethod) -> Self {
        ProblemSettings {
            max_deriv,
            max_poly,
            method,
            time_method: None,
            trim: None,
            time_trim: None,
            subsample: None,
            seed: 0,
            time_order: 1,
        }
    }
}

/// Point-wise evaluators for the spatial derivatives a term list needs.
struct ColumnEvaluator {
    derivs: BTreeMap<DerivPattern, PointDerivative>,
}

impl ColumnEvaluator {
    fn new(field: &Field, terms: &[BasisTerm], method: DerivMethod) -> Result<Self> {
        let mut derivs = BTreeMap::new();
        for t in terms {
            let d = t.deriv;
            if d.is_none() || derivs.contains_key(&d) {
                continue;
            }
            let pd = match (d.x, d.y) {
                (x, 0) => PointDerivative::new(field, Axis::X, x, method)?,
                (0, y) => PointDerivative::new(field, Axis::Y, y, method)?,
                _ => {
                    return Err(Error::UnsupportedCombination(format!(
                        "mixed derivative term {t} in a dictionary"
                    )))
                }
            };
            derivs.insert(d, pd);
        }
        Ok(ColumnEvaluator { derivs })
    }

    fn margin(&self) -> usize {
        self.derivs.values().map(|d| d.margin()).max().unwrap_or(0)
    }

    fn fill(&self, field: &Field, terms: &[BasisTerm], rows: &[GridPoint]) -> DMatrix<f64> {
        let mut matrix = DMatrix::zeros(rows.len(), terms.len());
        let mut cache: BTreeMap<DerivPattern, f64> = BTreeMap::new();
        for (r, &p) in rows.iter().enumerate() {
            let u = field.at(p.t, p.x, p.y);
            cache.clear();
            for (&d, pd) in &self.derivs {
                cache.insert(d, pd.eval(field, p));
            }
            for (c, t) in terms.iter().enumerate() {
                let dv = if t.deriv.is_none() { 0.0 } else { cache[&t.deriv] };
                matrix[(r, c)] = t.eval(u, dv);
            }
        }
        matrix
    }
}

fn time_derivative(field: &Field, time_order: u8, method: DerivMethod) -> Result<PointDerivative> {
    if !(1..=2).contains(&time_order) {
        return Err(Error::Config(format!("time order {time_order} must be 1 or 2")));
    }
    PointDerivative::new(field, Axis::T, time_order, method)
}

fn retained_rows(field: &Field, space_trim: usize, time_trim: usize) -> Result<Vec<GridPoint>> {
    let g = field.grid();
    let two_d = g.is_2d();
    let fits = |n: usize, trim: usize| n > 2 * trim;
    if !fits(g.nt, time_trim) || !fits(g.nx, space_trim) || (two_d && !fits(g.ny_or_one(), space_trim)) {
        return Err(Error::EmptyAfterTrim(space_trim.max(time_trim)));
    }
    let ys = if two_d {
        space_trim..g.ny_or_one() - space_trim
    } else {
        0..1
    };
    let mut rows = Vec::new();
    for t in time_trim..g.nt - time_trim {
        for x in space_trim..g.nx - space_trim {
            for y in ys.clone() {
                rows.push(GridPoint { t, x, y });
            }
        }
    }
    Ok(rows)
}

/// Full-row dictionary over every grid point outside the default trim margin.
pub fn build_dictionary(field: &Field, max_deriv: u8, max_poly: u32, method: DerivMethod) -> Result<Dictionary> {
    let terms = dictionary_terms(max_deriv, max_poly, field.grid().is_2d());
    build_dictionary_with_terms(field, &terms, method)
}

/// Like [`build_dictionary`] with an explicit term list.
pub fn build_dictionary_with_terms(field: &Field, terms: &[BasisTerm], method: DerivMethod) -> Result<Dictionary> {
    let eval = ColumnEvaluator::new(field, terms, method)?;
    let tt = time_trim_for(field, method, None)?;
    let rows = retained_rows(field, eval.margin(), tt)?;
    Ok(Dictionary {
        matrix: eval.fill(field, terms, &rows),
        terms: terms.to_vec(),
        row_index: rows,
    })
}

fn time_trim_for(field: &Field, method: DerivMethod, explicit: Option<usize>) -> Result<usize> {
    if let Some(t) = explicit {
        return Ok(t);
    }
    let margin = time_derivative(field, 1, method)?.margin();
    Ok(margin.max(MIN_TIME_TRIM))
}

/// Time-derivative target at the rows of `dictionary`.
pub fn build_target(
    field: &Field,
    dictionary: &Dictionary,
    time_order: u8,
    method: DerivMethod,
) -> Result<DVector<f64>> {
    let pd = time_derivative(field, time_order, method)?;
    Ok(DVector::from_iterator(
        dictionary.nrows(),
        dictionary.row_index.iter().map(|&p| pd.eval(field, p)),
    ))
}

/// Uniform row subset without replacement, returned in canonical row order.
pub fn subsample(problem: &RegressionProblem, n_rows: usize, seed: u64) -> Result<RegressionProblem> {
    let n = problem.nrows();
    let rows = sample_indices(n, n_rows, seed)?;
    Ok(RegressionProblem {
        target: problem.target.select_rows(&rows),
        dictionary: problem.dictionary.select_rows(&rows),
    })
}

fn sample_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::TooManyRows {
            requested: k,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

/// Assembles target and dictionary in one pass, subsampling rows before any
/// column is evaluated.
pub fn build_problem(field: &Field, settings: &ProblemSettings) -> Result<RegressionProblem> {
    let terms = dictionary_terms(settings.max_deriv, settings.max_poly, field.grid().is_2d());
    build_problem_with_terms(field, &terms, settings)
}

pub fn build_problem_with_terms(
    field: &Field,
    terms: &[BasisTerm],
    settings: &ProblemSettings,
) -> Result<RegressionProblem> {
    let eval = ColumnEvaluator::new(field, terms, settings.method)?;
    let time_method = settings.time_method.unwrap_or(settings.method);
    let target_op = time_derivative(field, settings.time_order, time_method)?;
    let space_trim = settings.trim.unwrap_or_else(|| eval.margin());
    let time_trim = time_trim_for(field, time_method, settings.time_trim)?;
    let mut rows = retained_rows(field, space_trim, time_trim)?;
    if let Some(k) = settings.subsample {
        if k < rows.len() {
            let keep = sample_indices(rows.len(), k, settings.seed)?;
            rows = keep.into_iter().map(|i| rows[i]).collect();
        }
    }
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|&p| target_op.eval(field, p)));
    let dictionary = Dictionary {
        matrix: eval.fill(field, terms, &rows),
        terms: terms.to_vec(),
        row_index: rows,
    };
    RegressionProblem::new(target, dictionary)
}
