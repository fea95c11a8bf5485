//! Sparse Bayesian regression with a spike-and-slab prior, fitted by
//! coordinate-ascent variational Bayes.
//!
//! Model, on columns and target rescaled to unit root-mean-square:
//!
//! ```text
//! Y = D (z * phi) + e,   e ~ N(0, s2 I)
//! phi_i ~ N(0, s2 v_s),  z_i ~ Bernoulli(p0),  s2 ~ InvGamma(a_sigma, b_sigma)
//! ```
//!
//! The mean-field posterior `q(phi) q(z) q(s2)` is Gaussian in `phi`
//! (`mu`, `sigma`), Bernoulli in each `z_i` (`w_i`) and inverse-gamma in `s2`
//! (`a`, `b`). Every update only needs `G = D'D`, `D'Y` and `Y'Y`, so a sweep
//! costs `O(K^3)` regardless of the number of rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::baseline::{ridge, stridge, StridgeConfig, TOL_GRID};
use crate::dictionary::{RegressionProblem, Scaling};
use crate::error::{Error, Result};
use crate::solvers::PdeModel;
use crate::terms::BasisTerm;

/// Inclusion logits are clamped to this magnitude so every `w_i` stays
/// strictly inside (0, 1) in floating point.
const MAX_LOGIT: f64 = 30.0;

const W_INIT_MIN: f64 = 0.05;
const W_INIT_MAX: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Ridge,
    Stridge,
    /// Fit from the ridge start and from STRidge starts at every threshold
    /// of the baseline grid, keep the fit with the highest ELBO, then try
    /// dropping each selected term in turn while that raises the ELBO.
    #[default]
    MultiStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsvbConfig {
    /// Slab variance relative to the noise variance.
    #[serde(alias = "vs")]
    pub v_s: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    /// Prior inclusion probability.
    pub p0: f64,
    /// Stop at the first sweep whose ELBO gain is below this.
    pub rho: f64,
    pub max_sweeps: usize,
    pub init: InitMethod,
}

impl Default for SsvbConfig {
    fn default() -> Self {
        SsvbConfig {
            v_s: 10.0,
            a_sigma: 1e-4,
            b_sigma: 1e-4,
            p0: 0.1,
            rho: 1e-6,
            max_sweeps: 500,
            init: InitMethod::MultiStart,
        }
    }
}

impl SsvbConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vb.vs", self.v_s),
            ("vb.a_sigma", self.a_sigma),
            ("vb.b_sigma", self.b_sigma),
            ("vb.rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::Config(format!("vb.p0 = {} must lie in (0, 1)", self.p0)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("vb.max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Variational parameters after some number of sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct VbState {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub a: f64,
    pub b: f64,
    /// Posterior mean noise precision `a / b`.
    pub tau: f64,
    /// Inclusion probabilities.
    pub w: DVector<f64>,
    pub elbo_trace: Vec<f64>,
    /// `ln |sigma|`, kept from the factorisation that produced `sigma`.
    pub log_det_sigma: f64,
}

impl VbState {
    /// State before the first sweep: prior-scale covariance, zero mean, and a
    /// noise posterior whose precision matches the data scale.
    pub fn initial(problem: &RegressionProblem, config: &SsvbConfig, w_init: &DVector<f64>) -> Result<Self> {
        let k = problem.ncols();
        if w_init.len() != k {
            return Err(Error::Config(format!(
                "w_init has {} entries for {k} columns",
                w_init.len()
            )));
        }
        if w_init.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(Error::Config(
                "initial inclusion probabilities must lie in (0, 1)".into(),
            ));
        }
        let n = problem.nrows() as f64;
        let a = noise_shape(config, n, k);
        let b = config.b_sigma + 0.5 * problem.target.norm_squared();
        let tau = a / b;
        let var = config.v_s / tau;
        Ok(VbState {
            mu: DVector::zeros(k),
            sigma: DMatrix::from_diagonal_element(k, k, var),
            a,
            b,
            tau,
            w: w_init.clone(),
            elbo_trace: Vec::new(),
            log_det_sigma: k as f64 * var.ln(),
        })
    }
}

fn noise_shape(config: &SsvbConfig, n: f64, k: usize) -> f64 {
    config.a_sigma + 0.5 * n + 0.5 * k as f64
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sufficient statistics of a (scaled) regression problem.
struct Moments<'a> {
    problem: &'a RegressionProblem,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    n: f64,
}

impl<'a> Moments<'a> {
    fn new(problem: &'a RegressionProblem) -> Self {
        let d = &problem.dictionary.matrix;
        Moments {
            problem,
            gram: d.tr_mul(d),
            cross: d.tr_mul(&problem.target),
            n: problem.nrows() as f64,
        }
    }

    fn k(&self) -> usize {
        self.cross.len()
    }

    /// `E||Y - D(z*phi)||^2 + E[phi'phi] / v_s`.
    ///
    /// The residual is formed in data space rather than from `Y'Y - 2 ...`,
    /// which would cancel catastrophically once the fit is nearly exact.
    fn expected_sse(&self, state: &VbState, v_s: f64) -> f64 {
        let k = self.k();
        let beta = state.w.component_mul(&state.mu);
        let resid = &self.problem.target - &self.problem.dictionary.matrix * &beta;
        let mut q = resid.norm_squared();
        for i in 0..k {
            let wi = state.w[i];
            let second = state.mu[i] * state.mu[i] + state.sigma[(i, i)];
            q += self.gram[(i, i)] * wi * (1.0 - wi) * second;
            for j in 0..k {
                q += self.gram[(i, j)] * wi * state.w[j] * state.sigma[(i, j)];
            }
            q += second / v_s;
        }
        q.max(0.0)
    }

    fn sweep(&self, state: &VbState, config: &SsvbConfig) -> Result<VbState> {
        let k = self.k();
        let mut next = state.clone();
        let w = &state.w;

        // q(phi): sigma = [tau (G o Omega + I / v_s)]^-1, mu = tau sigma W D'Y
        let mut precision = DMatrix::from_fn(k, k, |i, j| {
            let omega = if i == j { w[i] } else { w[i] * w[j] };
            self.gram[(i, j)] * omega
        });
        for i in 0..k {
            precision[(i, i)] += 1.0 / config.v_s;
        }
        precision *= state.tau;
        let chol = precision
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("posterior precision is not positive definite".into()))?;
        let log_det_precision: f64 = chol.l_dirty().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
        let sigma = chol.inverse();
        next.sigma = (&sigma + sigma.transpose()) * 0.5;
        next.log_det_sigma = -log_det_precision;
        next.mu = &next.sigma * w.component_mul(&self.cross) * state.tau;
        if next.mu.iter().any(|m| !m.is_finite()) || !next.log_det_sigma.is_finite() {
            return Err(Error::NumericalBreakdown("non-finite posterior moments".into()));
        }

        // q(s2)
        next.a = noise_shape(config, self.n, k);
        next.b = config.b_sigma + 0.5 * self.expected_sse(&next, config.v_s);
        next.tau = next.a / next.b;

        // q(z_i), Gauss-Seidel over i with the latest w
        let prior_logit = logit(config.p0);
        let tau = next.tau;
        for i in 0..k {
            let mu_i = next.mu[i];
            let second = mu_i * mu_i + next.sigma[(i, i)];
            let mut coupling = 0.0;
            for j in (0..k).filter(|&j| j != i) {
                coupling += self.gram[(i, j)] * next.w[j] * (next.mu[j] * mu_i + next.sigma[(j, i)]);
            }
            let eta = prior_logit - 0.5 * tau * second * self.gram[(i, i)] + tau * (mu_i * self.cross[i] - coupling);
            next.w[i] = expit(eta.clamp(-MAX_LOGIT, MAX_LOGIT));
        }

        let elbo = self.elbo(&next, config);
        next.elbo_trace.push(elbo);
        Ok(next)
    }

    fn elbo(&self, state: &VbState, config: &SsvbConfig) -> f64 {
        let k = self.k() as f64;
        let q = self.expected_sse(state, config.v_s);
        let (a, b) = (state.a, state.b);
        let tau = a / b;
        let mut value = -0.5 * self.n * (2.0 * std::f64::consts::PI).ln() + 0.5 * k - 0.5 * k * config.v_s.ln()
            + config.a_sigma * config.b_sigma.ln()
            - ln_gamma(config.a_sigma)
            + ln_gamma(a)
            - a * b.ln()
            + a
            - tau * (0.5 * q + config.b_sigma)
            + 0.5 * state.log_det_sigma;
        for &w in state.w.iter() {
            value += w * (config.p0 / w).ln() + (1.0 - w) * ((1.0 - config.p0) / (1.0 - w)).ln();
        }
        value
    }
}

/// One full coordinate-ascent cycle: `(mu, sigma)`, then the noise posterior,
/// then each inclusion probability in column order.
pub fn vb_sweep(state: &VbState, problem: &RegressionProblem, config: &SsvbConfig) -> Result<VbState> {
    Moments::new(problem).sweep(state, config)
}

/// Evidence lower bound of `state`; only differences between sweeps matter.
pub fn compute_elbo(state: &VbState, problem: &RegressionProblem, config: &SsvbConfig) -> f64 {
    Moments::new(problem).elbo(state, config)
}

/// Initial inclusion probabilities from a ridge or STRidge fit on
/// standardized columns.
pub fn init_inclusion_probs(
    problem: &RegressionProblem,
    method: InitMethod,
    stridge_config: &StridgeConfig,
) -> Result<DVector<f64>> {
    let k = problem.ncols();
    match method {
        InitMethod::Ridge => {
            if stridge_config.lambda <= 0.0 {
                return Err(Error::SingularSystem("ridge initialisation needs lambda > 0".into()));
            }
            let (scaled, _) = problem.standardized();
            let beta = ridge(&scaled.dictionary.matrix, &scaled.target, stridge_config.lambda)?;
            let max = beta.amax();
            Ok(DVector::from_iterator(
                k,
                beta.iter().map(|b| {
                    let r = if max > 0.0 { b.abs() / max } else { 0.0 };
                    r.clamp(W_INIT_MIN, W_INIT_MAX)
                }),
            ))
        }
        InitMethod::Stridge | InitMethod::MultiStart => {
            let fit = stridge(problem, stridge_config)?;
            Ok(support_init(k, &fit.support))
        }
    }
}

fn support_init(k: usize, support: &[usize]) -> DVector<f64> {
    let mut w = DVector::from_element(k, W_INIT_MIN);
    for &i in support {
        w[i] = W_INIT_MAX;
    }
    w
}

fn final_elbo(state: &VbState) -> f64 {
    state.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Initialises and fits according to `config.init`.
///
/// `Ridge` and `Stridge` run a single fit. `MultiStart` treats the ELBO as
/// the model-selection objective: every start is fitted, the best bound is
/// kept, and a backward pass re-fits with each selected term switched off,
/// accepting the first drop that improves the bound by more than `rho`.
pub fn discover(
    problem: &RegressionProblem,
    config: &SsvbConfig,
    stridge_config: &StridgeConfig,
    time_order: u8,
) -> Result<(VbState, DiscoveredModel)> {
    if config.init != InitMethod::MultiStart {
        let w = init_inclusion_probs(problem, config.init, stridge_config)?;
        return vb_fit(problem, config, &w, time_order);
    }
    let k = problem.ncols();
    let mut starts = vec![init_inclusion_probs(problem, InitMethod::Ridge, stridge_config)?];
    starts.push(init_inclusion_probs(problem, InitMethod::Stridge, stridge_config)?);
    for &tol in TOL_GRID.iter() {
        let cfg = StridgeConfig {
            tol,
            tol_search: false,
            ..*stridge_config
        };
        starts.push(support_init(k, &stridge(problem, &cfg)?.support));
    }
    let mut best: Option<(VbState, DiscoveredModel)> = None;
    let mut seen: Vec<DVector<f64>> = Vec::new();
    for w in starts {
        if seen.contains(&w) {
            continue;
        }
        let fit = vb_fit(problem, config, &w, time_order)?;
        seen.push(w);
        if best.as_ref().is_none_or(|b| final_elbo(&fit.0) > final_elbo(&b.0)) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("at least one start is always fitted");
    for _ in 0..k {
        let support = best.1.support.clone();
        let mut improved = false;
        for &drop in &support {
            let reduced: Vec<usize> = support.iter().copied().filter(|&i| i != drop).collect();
            let fit = vb_fit(problem, config, &support_init(k, &reduced), time_order)?;
            if final_elbo(&fit.0) > final_elbo(&best.0) + config.rho {
                best = fit;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// Selected model with posterior summaries in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredModel {
    pub terms: Vec<BasisTerm>,
    /// Posterior inclusion probabilities.
    pub pip: DVector<f64>,
    /// Indices with `pip > 0.5`.
    pub support: Vec<usize>,
    /// Posterior mean, zero off the support.
    pub mu_hat: DVector<f64>,
    /// Posterior covariance, zero outside the support block.
    pub sigma_hat: DMatrix<f64>,
    /// Posterior mean of the noise variance in target units squared.
    pub noise_variance: f64,
    pub time_order: u8,
    pub sweeps: usize,
    pub converged: bool,
    pub elbo_trace: Vec<f64>,
}

impl DiscoveredModel {
    fn from_state(state: &VbState, terms: &[BasisTerm], scaling: &Scaling, time_order: u8, converged: bool) -> Self {
        let k = terms.len();
        let support: Vec<usize> = (0..k).filter(|&i| state.w[i] > 0.5).collect();
        let mu_full = scaling.unscale_vector(&state.mu);
        let sigma_full = scaling.unscale_covariance(&state.sigma);
        let mut mu_hat = DVector::zeros(k);
        let mut sigma_hat = DMatrix::zeros(k, k);
        for &i in &support {
            mu_hat[i] = mu_full[i];
            for &j in &support {
                sigma_hat[(i, j)] = sigma_full[(i, j)];
            }
        }
        let noise_variance = if state.a > 1.0 {
            state.b / (state.a - 1.0)
        } else {
            state.b / state.a
        } * scaling.target
            * scaling.target;
        DiscoveredModel {
            terms: terms.to_vec(),
            pip: state.w.clone(),
            support,
            mu_hat,
            sigma_hat,
            noise_variance,
            time_order,
            sweeps: state.elbo_trace.len(),
            converged,
            elbo_trace: state.elbo_trace.clone(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(BasisTerm::label).collect()
    }

    pub fn support_labels(&self) -> Vec<String> {
        self.support.iter().map(|&i| self.terms[i].label()).collect()
    }

    /// `(term, mean, std)` for each selected term.
    pub fn coefficients(&self) -> Vec<(BasisTerm, f64, f64)> {
        self.support
            .iter()
            .map(|&i| (self.terms[i], self.mu_hat[i], self.sigma_hat[(i, i)].max(0.0).sqrt()))
            .collect()
    }

    /// The identified right-hand side as a simulable model.
    pub fn to_pde_model(&self) -> Result<PdeModel> {
        PdeModel::new(
            self.time_order,
            self.support.iter().map(|&i| (self.terms[i], self.mu_hat[i])).collect(),
        )
    }

    /// Human-readable equation, e.g. `u_t = 2.0012 u_xx`.
    pub fn equation(&self) -> String {
        let lhs = if self.time_order == 2 { "u_tt" } else { "u_t" };
        if self.support.is_empty() {
            return format!("{lhs} = 0");
        }
        let mut s = format!("{lhs} =");
        for (n, (term, c, _)) in self.coefficients().into_iter().enumerate() {
            if n == 0 {
                s.push_str(&format!(" {c:.6} {term}"));
            } else {
                let sign = if c < 0.0 { '-' } else { '+' };
                s.push_str(&format!(" {sign} {:.6} {term}", c.abs()));
            }
        }
        s
    }

    pub fn to_export(&self) -> ModelExport {
        let block = self
            .support
            .iter()
            .map(|&i| self.support.iter().map(|&j| self.sigma_hat[(i, j)]).collect())
            .collect();
        ModelExport {
            equation: self.equation(),
            time_order: self.time_order,
            labels: self.labels(),
            pip: self.pip.iter().copied().collect(),
            support: self.support_labels(),
            mean: self.support.iter().map(|&i| self.mu_hat[i]).collect(),
            covariance: block,
            noise_variance: self.noise_variance,
            sweeps: self.sweeps,
            converged: self.converged,
            elbo_trace: self.elbo_trace.clone(),
        }
    }

    pub fn from_export(export: &ModelExport) -> Result<Self> {
        let terms = export
            .labels
            .iter()
            .map(|l| l.parse::<BasisTerm>())
            .collect::<Result<Vec<_>>>()?;
        let k = terms.len();
        if export.pip.len() != k {
            return Err(Error::Format("pip length does not match labels".into()));
        }
        let support = export
            .support
            .iter()
            .map(|l| {
                export
                    .labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnresolvableLabel(l.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let s = support.len();
        if export.mean.len() != s || export.covariance.len() != s || export.covariance.iter().any(|r| r.len() != s) {
            return Err(Error::Format("support block has inconsistent dimensions".into()));
        }
        let mut mu_hat = DVector::zeros(k);
        let mut sigma_hat = DMatrix::zeros(k, k);
        for (a, &i) in support.iter().enumerate() {
            mu_hat[i] = export.mean[a];
            for (b, &j) in support.iter().enumerate() {
                sigma_hat[(i, j)] = export.covariance[a][b];
            }
        }
        Ok(DiscoveredModel {
            terms,
            pip: DVector::from_vec(export.pip.clone()),
            support,
            mu_hat,
            sigma_hat,
            noise_variance: export.noise_variance,
            time_order: export.time_order,
            sweeps: export.sweeps,
            converged: export.converged,
            elbo_trace: export.elbo_trace.clone(),
        })
    }
}

/// JSON form of a [`DiscoveredModel`]; the covariance is the support block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub equation: String,
    pub time_order: u8,
    pub labels: Vec<String>,
    pub pip: Vec<f64>,
    pub support: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub noise_variance: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub elbo_trace: Vec<f64>,
}

/// Runs sweeps on the standardized problem until the ELBO gain drops below
/// `rho` or `max_sweeps` is reached.
///
/// Hitting `max_sweeps` is not an error: the final state is returned with
/// `converged == false` and a warning is logged.
pub fn vb_fit(
    problem: &RegressionProblem,
    config: &SsvbConfig,
    w_init: &DVector<f64>,
    time_order: u8,
) -> Result<(VbState, DiscoveredModel)> {
    config.validate()?;
    let (scaled, scaling) = problem.standardized();
    let moments = Moments::new(&scaled);
    let mut state = VbState::initial(&scaled, config, w_init)?;
    let mut converged = false;
    for _ in 0..config.max_sweeps {
        state = moments.sweep(&state, config)?;
        if let [.., prev, last] = state.elbo_trace[..] {
            if last - prev < config.rho {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!(
            "variational fit stopped after {} sweeps without meeting the ELBO tolerance",
            config.max_sweeps
        );
    }
    let model = DiscoveredModel::from_state(&state, &problem.dictionary.terms, &scaling, time_order, converged);
    Ok((state, model))
}

/// Largest dictionary [`exact_posterior`] will enumerate.
pub const MAX_EXACT_TERMS: usize = 20;

/// Posterior over inclusion patterns computed by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    /// Marginal inclusion probabilities.
    pub pip: DVector<f64>,
    /// Most probable inclusion pattern.
    pub map_support: Vec<usize>,
    /// Its posterior probability.
    pub map_probability: f64,
}

/// Exact posterior inclusion probabilities under the same prior as the
/// variational fit, by summing the conjugate normal-inverse-gamma marginal
/// likelihood over all `2^K` inclusion patterns.
///
/// Intended as a reference for small dictionaries.
pub fn exact_posterior(problem: &RegressionProblem, config: &SsvbConfig) -> Result<ExactPosterior> {
    config.validate()?;
    let k = problem.ncols();
    if k > MAX_EXACT_TERMS {
        return Err(Error::Config(format!(
            "exact enumeration supports at most {MAX_EXACT_TERMS} terms, got {k}"
        )));
    }
    let (scaled, _) = problem.standardized();
    let n = scaled.nrows() as f64;
    let log_prior_in = config.p0.ln();
    let log_prior_out = (1.0 - config.p0).ln();
    let mut log_post = Vec::with_capacity(1 << k);
    for mask in 0usize..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let (sse, log_det) = penalised_fit(&scaled, &cols, config.v_s)?;
        let size = cols.len() as f64;
        let lp = size * log_prior_in + (k as f64 - size) * log_prior_out
            - 0.5 * log_det
            - (config.a_sigma + 0.5 * n) * (config.b_sigma + 0.5 * sse).ln();
        log_post.push(lp);
    }
    let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut pip = DVector::zeros(k);
    let mut best = 0;
    for (mask, &wt) in weights.iter().enumerate() {
        for i in (0..k).filter(|i| mask >> i & 1 == 1) {
            pip[i] += wt / total;
        }
        if wt > weights[best] {
            best = mask;
        }
    }
    Ok(ExactPosterior {
        pip,
        map_support: (0..k).filter(|i| best >> i & 1 == 1).collect(),
        map_probability: weights[best] / total,
    })
}

/// Posterior mean of the coefficients given that exactly `support` is
/// active, in original units (zero elsewhere).
pub fn exact_conditional_mean(
    problem: &RegressionProblem,
    support: &[usize],
    config: &SsvbConfig,
) -> Result<DVector<f64>> {
    let (scaled, scaling) = problem.standardized();
    let beta = penalised_solution(&scaled, support, config.v_s)?;
    let mut full = DVector::zeros(problem.ncols());
    for (a, &i) in support.iter().enumerate() {
        full[i] = beta[a];
    }
    Ok(scaling.unscale_vector(&full))
}

fn penalised_solution(problem: &RegressionProblem, cols: &[usize], v_s: f64) -> Result<DVector<f64>> {
    if cols.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let d = problem.dictionary.matrix.select_columns(cols);
    let mut a = d.tr_mul(&d);
    for i in 0..cols.len() {
        a[(i, i)] += 1.0 / v_s;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::NumericalBreakdown("penalised normal equations".into()))?;
    Ok(chol.solve(&d.tr_mul(&problem.target)))
}

/// `min_b ||Y - D b||^2 + ||b||^2 / v_s` and `ln |I + v_s D'D|` on `cols`.
fn penalised_fit(problem: &RegressionProblem, cols: &[usize], v_s: f64) -> Result<(f64, f64)> {
    if cols.is_empty() {
        return Ok((problem.target.norm_squared(), 0.0));
    }
    let d = problem.dictionary.matrix.select_columns(cols);
    let mut a = d.tr_mul(&d) * v_s;
    for i in 0..cols.len() {
        a[(i, i)] += 1.0;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::NumericalBreakdown("penalised normal equations".into()))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
    let beta = chol.solve(&d.tr_mul(&problem.target)) * v_s;
    let sse = (&problem.target - &d * &beta).norm_squared() + beta.norm_squared() / v_s;
    Ok((sse, log_det))
}
