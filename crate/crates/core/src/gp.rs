//! Multi-fidelity Gaussian process regression for one objective.
//!
//! Fidelity `m` of the objective is modelled as the lowest fidelity plus
//! `m - 1` independent error processes, which gives the recursive kernel
//!
//! ```text
//! k((x, m), (x', m')) = k_1(x, x') + (min(m, m') - 1) * k_e(x, x')
//! ```
//!
//! with squared-exponential `k_1` and `k_e`. All fidelities share one Gram
//! matrix, so the posterior at any fidelity, and the predictive covariance
//! between two fidelities at the same input, come from a single Cholesky
//! factorization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stats::LN_2PI;

/// Lower and upper bound applied to every kernel hyperparameter when fitting.
pub const PARAM_BOUNDS: (f64, f64) = (1e-3, 1e3);

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Hyperparameters of the two squared-exponential kernels plus observation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub base_lengthscales: Vec<f64>,
    pub base_variance: f64,
    pub error_lengthscales: Vec<f64>,
    pub error_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(
        base_lengthscales: Vec<f64>,
        base_variance: f64,
        error_lengthscales: Vec<f64>,
        error_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let p = KernelParams {
            base_lengthscales,
            base_variance,
            error_lengthscales,
            error_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(
        dim: usize,
        base_lengthscale: f64,
        base_variance: f64,
        error_lengthscale: f64,
        error_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        KernelParams::new(
            vec![base_lengthscale; dim],
            base_variance,
            vec![error_lengthscale; dim],
            error_variance,
            noise_variance,
        )
    }

    /// Starting point used before any data-driven fit, for inputs scaled to
    /// the unit cube and standardized outputs.
    pub fn default_for(dim: usize) -> Self {
        KernelParams::isotropic(dim, 0.3, 1.0, 0.3, 0.1, 1e-3).expect("positive defaults")
    }

    pub fn dim(&self) -> usize {
        self.base_lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_lengthscales.is_empty() {
            return Err(Error::arg("kernel needs at least one lengthscale"));
        }
        if self.base_lengthscales.len() != self.error_lengthscales.len() {
            return Err(Error::arg("base and error lengthscales differ in length"));
        }
        let all = self
            .base_lengthscales
            .iter()
            .chain(&self.error_lengthscales)
            .chain([&self.base_variance, &self.error_variance, &self.noise_variance]);
        for v in all {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::arg(format!(
                    "kernel hyperparameters must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Log-parameters in the order: base lengthscales, base variance,
    /// error lengthscales, error variance, noise variance.
    fn to_log(&self) -> Vec<f64> {
        self.base_lengthscales
            .iter()
            .chain([&self.base_variance])
            .chain(&self.error_lengthscales)
            .chain([&self.error_variance, &self.noise_variance])
            .map(|v| v.ln())
            .collect()
    }

    fn from_log(dim: usize, theta: &[f64]) -> Self {
        let (lo, hi) = (PARAM_BOUNDS.0.ln(), PARAM_BOUNDS.1.ln());
        let v: Vec<f64> = theta.iter().map(|t| t.clamp(lo, hi).exp()).collect();
        KernelParams {
            base_lengthscales: v[..dim].to_vec(),
            base_variance: v[dim],
            error_lengthscales: v[dim + 1..2 * dim + 1].to_vec(),
            error_variance: v[2 * dim + 1],
            noise_variance: v[2 * dim + 2],
        }
    }
}

/// Squared-exponential kernel with per-dimension lengthscales.
pub(crate) fn squared_exponential(x: &[f64], y: &[f64], lengthscales: &[f64], variance: f64) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(y)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let d = (a - b) / l;
            d * d
        })
        .sum();
    variance * (-0.5 * r2).exp()
}

fn check_pair(x: &[f64], y: &[f64], params: &KernelParams) -> Result<()> {
    if x.len() != y.len() || x.len() != params.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: {} vs {} (kernel expects {})",
            x.len(),
            y.len(),
            params.dim()
        )));
    }
    Ok(())
}

/// `k_m(x, x') = k_1(x, x') + (m - 1) k_e(x, x')`.
pub fn kernel_same_fidelity(x: &[f64], y: &[f64], m: usize, params: &KernelParams) -> Result<f64> {
    check_pair(x, y, params)?;
    if m == 0 {
        return Err(Error::arg("fidelity indices start at 1"));
    }
    Ok(same_fidelity_unchecked(x, y, m, params))
}

fn same_fidelity_unchecked(x: &[f64], y: &[f64], m: usize, params: &KernelParams) -> f64 {
    let base = squared_exponential(x, y, &params.base_lengthscales, params.base_variance);
    if m == 1 {
        return base;
    }
    let err = squared_exponential(x, y, &params.error_lengthscales, params.error_variance);
    base + (m - 1) as f64 * err
}

/// Covariance between fidelity `m` at `x` and fidelity `m2` at `y`; the
/// shared part of the recursion ends at the lower of the two fidelities.
pub fn kernel_cross_fidelity(
    x: &[f64],
    m: usize,
    y: &[f64],
    m2: usize,
    params: &KernelParams,
) -> Result<f64> {
    kernel_same_fidelity(x, y, m.min(m2), params)
}

/// One evaluation of one objective at one fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityObservation {
    pub input: Vec<f64>,
    /// 1-based fidelity index.
    pub fidelity: usize,
    pub value: f64,
    pub raw_cost: f64,
}

/// Posterior marginal at `(x, m)` plus its covariance with `(x, M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
    pub cross_cov_to_highest: f64,
}

impl PosteriorSummary {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Outcome of a hyperparameter search.
#[derive(Debug, Clone)]
pub struct HyperparameterFit {
    pub params: KernelParams,
    pub log_marginal_likelihood: f64,
    /// False when no restart beat the incumbent; `params` is then the incumbent.
    pub improved: bool,
}

#[derive(Debug, Clone)]
struct Factorization {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

/// Multi-fidelity GP surrogate for a single objective.
#[derive(Debug, Clone)]
pub struct MultiFidelityGp {
    dim: usize,
    n_fidelities: usize,
    params: KernelParams,
    observations: Vec<FidelityObservation>,
    normalize_outputs: bool,
    y_offset: f64,
    y_scale: f64,
    factor: Option<Factorization>,
}

impl MultiFidelityGp {
    pub fn new(dim: usize, n_fidelities: usize, params: KernelParams) -> Result<Self> {
        if n_fidelities == 0 {
            return Err(Error::arg("an objective needs at least one fidelity"));
        }
        params.validate()?;
        if params.dim() != dim {
            return Err(Error::arg(format!(
                "kernel has {} lengthscales for a {dim}-dimensional input",
                params.dim()
            )));
        }
        Ok(MultiFidelityGp {
            dim,
            n_fidelities,
            params,
            observations: Vec::new(),
            normalize_outputs: false,
            y_offset: 0.0,
            y_scale: 1.0,
            factor: None,
        })
    }

    /// Standardize targets to zero mean and unit variance before conditioning.
    /// Predictions are always reported in the original units.
    pub fn with_output_normalization(mut self, on: bool) -> Result<Self> {
        self.normalize_outputs = on;
        self.refactor()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_fidelities(&self) -> usize {
        self.n_fidelities
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn observations(&self) -> &[FidelityObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// `(offset, scale)` such that original = offset + scale * internal.
    pub fn output_transform(&self) -> (f64, f64) {
        (self.y_offset, self.y_scale)
    }

    /// Training targets in the internal (possibly standardized) units.
    pub fn internal_targets(&self) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| (o.value - self.y_offset) / self.y_scale)
            .collect()
    }

    pub fn add_observation(&mut self, obs: FidelityObservation) -> Result<()> {
        self.extend([obs])
    }

    pub fn extend<I: IntoIterator<Item = FidelityObservation>>(&mut self, obs: I) -> Result<()> {
        for o in obs {
            self.validate_observation(&o)?;
            self.observations.push(o);
        }
        self.refactor()
    }

    pub fn set_params(&mut self, params: KernelParams) -> Result<()> {
        params.validate()?;
        if params.dim() != self.dim {
            return Err(Error::arg("kernel dimension does not match the model"));
        }
        self.params = params;
        self.refactor()
    }

    fn validate_observation(&self, o: &FidelityObservation) -> Result<()> {
        if o.input.len() != self.dim {
            return Err(Error::arg(format!(
                "observation has dimension {}, model expects {}",
                o.input.len(),
                self.dim
            )));
        }
        if o.fidelity == 0 || o.fidelity > self.n_fidelities {
            return Err(Error::arg(format!(
                "fidelity {} outside 1..={}",
                o.fidelity, self.n_fidelities
            )));
        }
        if !o.value.is_finite() {
            return Err(Error::arg("observation value is not finite"));
        }
        Ok(())
    }

    fn refactor(&mut self) -> Result<()> {
        if self.observations.is_empty() {
            self.y_offset = 0.0;
            self.y_scale = 1.0;
            self.factor = None;
            return Ok(());
        }
        if self.normalize_outputs {
            let n = self.observations.len() as f64;
            let mean = self.observations.iter().map(|o| o.value).sum::<f64>() / n;
            let var = self
                .observations
                .iter()
                .map(|o| (o.value - mean).powi(2))
                .sum::<f64>()
                / n;
            self.y_offset = mean;
            self.y_scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        } else {
            self.y_offset = 0.0;
            self.y_scale = 1.0;
        }
        let y = DVector::from_vec(self.internal_targets());
        let chol = factorize(&self.gram(&self.params))?;
        let alpha = chol.solve(&y);
        self.factor = Some(Factorization { chol, alpha });
        Ok(())
    }

    /// `K + σ²_noise I` over the training set.
    fn gram(&self, params: &KernelParams) -> DMatrix<f64> {
        let n = self.observations.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            let oi = &self.observations[i];
            for j in 0..=i {
                let oj = &self.observations[j];
                let v = same_fidelity_unchecked(
                    &oi.input,
                    &oj.input,
                    oi.fidelity.min(oj.fidelity),
                    params,
                );
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += params.noise_variance;
        }
        k
    }

    fn check_query(&self, x: &[f64], m: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::arg(format!(
                "query has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        if m == 0 || m > self.n_fidelities {
            return Err(Error::arg(format!(
                "fidelity {m} outside 1..={}",
                self.n_fidelities
            )));
        }
        Ok(())
    }

    /// Base and error kernel columns against the training inputs.
    fn kernel_columns(&self, x: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let p = &self.params;
        let base = DVector::from_iterator(
            self.observations.len(),
            self.observations
                .iter()
                .map(|o| squared_exponential(x, &o.input, &p.base_lengthscales, p.base_variance)),
        );
        let err = DVector::from_iterator(
            self.observations.len(),
            self.observations.iter().map(|o| {
                squared_exponential(x, &o.input, &p.error_lengthscales, p.error_variance)
            }),
        );
        (base, err)
    }

    /// `k_n^{(m)}(x)` assembled from the cached base/error columns.
    fn cross_column(&self, base: &DVector<f64>, err: &DVector<f64>, m: usize) -> DVector<f64> {
        DVector::from_iterator(
            base.len(),
            self.observations
                .iter()
                .enumerate()
                .map(|(i, o)| base[i] + (m.min(o.fidelity) - 1) as f64 * err[i]),
        )
    }

    fn prior_self(&self, m: usize) -> f64 {
        self.params.base_variance + (m - 1) as f64 * self.params.error_variance
    }

    /// Posterior mean, variance and covariance with the highest fidelity at `(x, m)`.
    pub fn predict(&self, x: &[f64], m: usize) -> Result<PosteriorSummary> {
        self.check_query(x, m)?;
        let top = self.n_fidelities;
        let s2 = self.y_scale * self.y_scale;
        let Some(f) = &self.factor else {
            return Ok(PosteriorSummary {
                mean: self.y_offset,
                variance: s2 * self.prior_self(m),
                cross_cov_to_highest: s2 * self.prior_self(m.min(top)),
            });
        };
        let (base, err) = self.kernel_columns(x);
        let km = self.cross_column(&base, &err, m);
        let vm = f.chol.l().solve_lower_triangular(&km).expect("triangular solve");
        let (vtop, ktop_self) = if m == top {
            (vm.clone(), self.prior_self(m))
        } else {
            let kt = self.cross_column(&base, &err, top);
            (
                f.chol.l().solve_lower_triangular(&kt).expect("triangular solve"),
                self.prior_self(m),
            )
        };
        let variance = (self.prior_self(m) - vm.dot(&vm)).max(0.0);
        let cross = ktop_self - vm.dot(&vtop);
        Ok(PosteriorSummary {
            mean: self.y_offset + self.y_scale * km.dot(&f.alpha),
            variance: s2 * variance,
            cross_cov_to_highest: s2 * if m == top { variance } else { cross },
        })
    }

    /// Summaries at every fidelity `1..=M` for one input, sharing the kernel
    /// columns and the triangular solve against the highest fidelity.
    pub fn predict_all(&self, x: &[f64]) -> Result<Vec<PosteriorSummary>> {
        self.check_query(x, 1)?;
        let top = self.n_fidelities;
        let s2 = self.y_scale * self.y_scale;
        let Some(f) = &self.factor else {
            return Ok((1..=top)
                .map(|m| PosteriorSummary {
                    mean: self.y_offset,
                    variance: s2 * self.prior_self(m),
                    cross_cov_to_highest: s2 * self.prior_self(m),
                })
                .collect());
        };
        let (base, err) = self.kernel_columns(x);
        let solves: Vec<(DVector<f64>, DVector<f64>)> = (1..=top)
            .map(|m| {
                let k = self.cross_column(&base, &err, m);
                let v = f.chol.l().solve_lower_triangular(&k).expect("triangular solve");
                (k, v)
            })
            .collect();
        let vtop = &solves[top - 1].1;
        Ok(solves
            .iter()
            .enumerate()
            .map(|(i, (k, v))| {
                let m = i + 1;
                let variance = (self.prior_self(m) - v.dot(v)).max(0.0);
                let cross = if m == top {
                    variance
                } else {
                    self.prior_self(m) - v.dot(vtop)
                };
                PosteriorSummary {
                    mean: self.y_offset + self.y_scale * k.dot(&f.alpha),
                    variance: s2 * variance,
                    cross_cov_to_highest: s2 * cross,
                }
            })
            .collect())
    }

    /// Posterior mean only; skips the triangular solves.
    pub fn posterior_mean(&self, x: &[f64], m: usize) -> Result<f64> {
        self.check_query(x, m)?;
        let Some(f) = &self.factor else {
            return Ok(self.y_offset);
        };
        let (base, err) = self.kernel_columns(x);
        Ok(self.y_offset + self.y_scale * self.cross_column(&base, &err, m).dot(&f.alpha))
    }

    /// Log evidence of the (internal) targets under `params`.
    pub fn log_marginal_likelihood(&self, params: &KernelParams) -> Result<f64> {
        params.validate()?;
        if params.dim() != self.dim {
            return Err(Error::arg("kernel dimension does not match the model"));
        }
        if self.observations.is_empty() {
            return Ok(0.0);
        }
        let y = DVector::from_vec(self.internal_targets());
        let chol = factorize(&self.gram(params))?;
        let alpha = chol.solve(&y);
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let n = y.len() as f64;
        Ok(-0.5 * (y.dot(&alpha) + log_det + n * LN_2PI))
    }

    /// Multi-restart Nelder-Mead ascent of the log marginal likelihood over
    /// log-parameters inside [`PARAM_BOUNDS`]. The first restart starts at the
    /// current parameters; later ones start from seeded random points.
    pub fn fit_hyperparameters(&self, restarts: usize, seed: u64) -> Result<HyperparameterFit> {
        self.fit_hyperparameters_capped(restarts, 120 * (2 * self.dim + 3), seed)
    }

    /// As [`fit_hyperparameters`](Self::fit_hyperparameters) with at most
    /// `max_evals` likelihood evaluations per restart.
    pub fn fit_hyperparameters_capped(
        &self,
        restarts: usize,
        max_evals: usize,
        seed: u64,
    ) -> Result<HyperparameterFit> {
        let incumbent = self.params.clone();
        let incumbent_lml = self
            .log_marginal_likelihood(&incumbent)
            .unwrap_or(f64::NEG_INFINITY);
        let mut best = HyperparameterFit {
            params: incumbent.clone(),
            log_marginal_likelihood: incumbent_lml,
            improved: false,
        };
        if restarts == 0 {
            return Ok(best);
        }
        if self.observations.len() < 2 {
            return Err(Error::arg("hyperparameter fitting needs at least two observations"));
        }
        let dim = self.dim;
        let objective = |theta: &[f64]| -> f64 {
            let p = KernelParams::from_log(dim, theta);
            match self.log_marginal_likelihood(&p) {
                Ok(v) if v.is_finite() => -v,
                _ => f64::INFINITY,
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (PARAM_BOUNDS.0.ln(), PARAM_BOUNDS.1.ln());
        for r in 0..restarts {
            let start = if r == 0 {
                incumbent.to_log()
            } else {
                random_log_params(dim, &mut rng)
            };
            let (theta, neg) = nelder_mead(&objective, &start, 0.5, max_evals, (lo, hi));
            let lml = -neg;
            if lml.is_finite() && lml > best.log_marginal_likelihood + 1e-9 {
                best = HyperparameterFit {
                    params: KernelParams::from_log(dim, &theta),
                    log_marginal_likelihood: lml,
                    improved: true,
                };
            }
        }
        if !best.improved {
            log::debug!("hyperparameter search did not improve on the incumbent");
        }
        Ok(best)
    }

    /// Fits hyperparameters and installs them when they improve the evidence.
    pub fn refit(&mut self, restarts: usize, seed: u64) -> Result<HyperparameterFit> {
        self.refit_capped(restarts, 120 * (2 * self.dim + 3), seed)
    }

    pub fn refit_capped(&mut self, restarts: usize, max_evals: usize, seed: u64) -> Result<HyperparameterFit> {
        let fit = self.fit_hyperparameters_capped(restarts, max_evals, seed)?;
        if fit.improved {
            self.set_params(fit.params.clone())?;
        }
        Ok(fit)
    }
}

fn random_log_params<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let ls = |rng: &mut R| rng.random_range(0.05f64.ln()..2f64.ln());
    let mut v = Vec::with_capacity(2 * dim + 3);
    for _ in 0..dim {
        v.push(ls(rng));
    }
    v.push(rng.random_range(0.1f64.ln()..10f64.ln()));
    for _ in 0..dim {
        v.push(ls(rng));
    }
    v.push(rng.random_range(0.01f64.ln()..1f64.ln()));
    v.push(rng.random_range(1e-3f64.ln()..0.1f64.ln()));
    v
}

/// Cholesky with escalating diagonal jitter.
pub(crate) fn factorize(k: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = k.nrows();
    let mut jitter = JITTER_START;
    loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = kj.cholesky() {
            return Ok(c);
        }
        if jitter >= JITTER_MAX {
            let min_diag = (0..n).map(|i| k[(i, i)]).fold(f64::INFINITY, f64::min);
            return Err(Error::Numerical(format!(
                "Gram matrix of size {n} is not positive definite after jitter {jitter:e} \
                 (smallest diagonal entry {min_diag:e})"
            )));
        }
        jitter *= 10.0;
    }
}

/// Box-projected Nelder-Mead minimization.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step: f64,
    max_evals: usize,
    bounds: (f64, f64),
) -> (Vec<f64>, f64) {
    let n = start.len();
    let project = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(bounds.0, bounds.1);
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    project(&mut x0);
    let f0 = f(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += if x[i] + step <= bounds.1 { step } else { -step };
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = n + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-8 && simplex[0].1.is_finite() {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect();
            project(&mut x);
            x
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = along(0.5);
                let fx = f(&x);
                (x, fx)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (v, b) in x.iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    *fx = f(x);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(dim: usize) -> KernelParams {
        KernelParams::isotropic(dim, 0.5, 1.0, 0.5, 1.0, 1e-2).unwrap()
    }

    #[test]
    fn same_fidelity_self_values() {
        let p = unit(2);
        let x = [0.3, 0.7];
        assert_relative_eq!(kernel_same_fidelity(&x, &x, 1, &p).unwrap(), 1.0);
        assert_relative_eq!(kernel_same_fidelity(&x, &x, 3, &p).unwrap(), 3.0);
        let far = [100.0, -100.0];
        assert!(kernel_same_fidelity(&x, &far, 2, &p).unwrap() < 1e-12);
        assert!(kernel_same_fidelity(&x, &[0.1], 1, &p).is_err());
    }

    #[test]
    fn cross_fidelity_uses_lower_index() {
        let p = KernelParams::new(vec![0.4, 0.9], 1.3, vec![0.2, 0.5], 0.7, 1e-2).unwrap();
        let (x, y) = ([0.1, 0.2], [0.4, 0.1]);
        let k25 = kernel_cross_fidelity(&x, 2, &y, 5, &p).unwrap();
        assert_eq!(k25, kernel_same_fidelity(&x, &y, 2, &p).unwrap());
        assert_eq!(k25, kernel_cross_fidelity(&y, 5, &x, 2, &p).unwrap());
        let u = unit(2);
        assert_relative_eq!(kernel_cross_fidelity(&x, 1, &x, 4, &u).unwrap(), 1.0);
    }

    #[test]
    fn empty_model_returns_prior() {
        let gp = MultiFidelityGp::new(2, 3, unit(2)).unwrap();
        let s = gp.predict(&[0.5, 0.5], 2).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_relative_eq!(s.variance, 2.0);
        assert_relative_eq!(s.cross_cov_to_highest, 2.0);
        assert_eq!(gp.log_marginal_likelihood(gp.params()).unwrap(), 0.0);
    }

    #[test]
    fn interpolates_in_low_noise_limit() {
        let p = KernelParams::isotropic(1, 0.5, 1.0, 0.5, 1.0, 1e-9).unwrap();
        let mut gp = MultiFidelityGp::new(1, 2, p).unwrap();
        gp.add_observation(FidelityObservation {
            input: vec![0.4],
            fidelity: 2,
            value: 1.7,
            raw_cost: 10.0,
        })
        .unwrap();
        let s = gp.predict(&[0.4], 2).unwrap();
        assert_relative_eq!(s.mean, 1.7, epsilon = 1e-6);
        assert!(s.variance < 1e-6);
    }

    #[test]
    fn single_observation_evidence() {
        let p = KernelParams::isotropic(1, 0.5, 0.8, 0.5, 1.0, 0.3).unwrap();
        let mut gp = MultiFidelityGp::new(1, 2, p.clone()).unwrap();
        let y = 0.9;
        gp.add_observation(FidelityObservation { input: vec![0.2], fidelity: 1, value: y, raw_cost: 1.0 })
            .unwrap();
        let v = 0.8 + 0.3 + JITTER_START;
        let expect = -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + y * y / v);
        assert_relative_eq!(gp.log_marginal_likelihood(&p).unwrap(), expect, epsilon = 1e-9);
    }

    #[test]
    fn highest_fidelity_cross_cov_is_variance() {
        let mut gp = MultiFidelityGp::new(1, 3, unit(1)).unwrap();
        gp.extend((0..6).map(|i| FidelityObservation {
            input: vec![i as f64 / 5.0],
            fidelity: 1 + i % 3,
            value: (i as f64).sin(),
            raw_cost: 1.0,
        }))
        .unwrap();
        let s = gp.predict(&[0.33], 3).unwrap();
        assert_eq!(s.cross_cov_to_highest, s.variance);
        let all = gp.predict_all(&[0.33]).unwrap();
        for (m, a) in all.iter().enumerate() {
            let single = gp.predict(&[0.33], m + 1).unwrap();
            assert_relative_eq!(a.mean, single.mean, epsilon = 1e-12);
            assert_relative_eq!(a.variance, single.variance, epsilon = 1e-12);
            assert_relative_eq!(a.cross_cov_to_highest, single.cross_cov_to_highest, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalization_is_reported_in_original_units() {
        let obs: Vec<_> = (0..5)
            .map(|i| FidelityObservation {
                input: vec![i as f64 / 4.0],
                fidelity: 1,
                value: 100.0 + 20.0 * (i as f64),
                raw_cost: 1.0,
            })
            .collect();
        let mut gp = MultiFidelityGp::new(1, 1, unit(1)).unwrap().with_output_normalization(true).unwrap();
        gp.extend(obs).unwrap();
        let s = gp.predict(&[0.5], 1).unwrap();
        assert!((s.mean - 140.0).abs() < 2.0, "{}", s.mean);
        let (off, scale) = gp.output_transform();
        assert_relative_eq!(off, 140.0);
        assert!(scale > 1.0);
    }

    #[test]
    fn rejects_bad_observations() {
        let mut gp = MultiFidelityGp::new(2, 2, unit(2)).unwrap();
        let bad_fid = FidelityObservation { input: vec![0.1, 0.1], fidelity: 3, value: 0.0, raw_cost: 1.0 };
        assert!(gp.add_observation(bad_fid).is_err());
        let bad_dim = FidelityObservation { input: vec![0.1], fidelity: 1, value: 0.0, raw_cost: 1.0 };
        assert!(gp.add_observation(bad_dim).is_err());
        assert!(gp.predict(&[0.1, 0.1], 0).is_err());
    }

    #[test]
    fn zero_restarts_returns_incumbent() {
        let mut gp = MultiFidelityGp::new(1, 1, unit(1)).unwrap();
        gp.extend((0..4).map(|i| FidelityObservation {
            input: vec![i as f64 / 3.0],
            fidelity: 1,
            value: i as f64,
            raw_cost: 1.0,
        }))
        .unwrap();
        let fit = gp.fit_hyperparameters(0, 1).unwrap();
        assert!(!fit.improved);
        assert_eq!(fit.params, *gp.params());
    }

    #[test]
    fn constant_zero_data_shrinks_toward_bounds() {
        let mut gp = MultiFidelityGp::new(1, 2, unit(1)).unwrap();
        gp.extend((0..8).map(|i| FidelityObservation {
            input: vec![i as f64 / 7.0],
            fidelity: 1 + i % 2,
            value: 0.0,
            raw_cost: 1.0,
        }))
        .unwrap();
        let fit = gp.refit(3, 4).unwrap();
        assert!(fit.params.base_variance < 0.05, "{:?}", fit.params);
        assert!(fit.params.noise_variance < 0.05, "{:?}", fit.params);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, fx) = nelder_mead(&f, &[0.0, 0.0], 0.5, 2000, (-10.0, 10.0));
        assert!(fx < 1e-8);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(x[1], -0.5, epsilon = 1e-3);
    }
}
