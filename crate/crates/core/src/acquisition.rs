//! Output-space entropy acquisition: information gained about the
//! highest-fidelity Pareto front per unit of normalized cost.
//!
//! For a candidate `x` and fidelity vector `m`,
//!
//! ```text
//! α(x, m) = [ Σ_j H(y_j^(m_j) | D, x) − (1/S) Σ_s Σ_j H(y_j^(m_j) | D, x, y*_js) ] / λ(m)
//! ```
//!
//! where `y*_js` is the largest `j`-th component of Pareto-front sample `s`.
//! A term at the highest fidelity is the entropy of a Gaussian truncated at
//! `y*_js`. Below the highest fidelity the truncation is either applied to the
//! low-fidelity marginal directly (`Tg`), or carried over from the
//! highest fidelity through the bivariate posterior and integrated
//! numerically (`Ni`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{MultiFidelityGp, PosteriorSummary};
use crate::moo::ParetoFrontSample;
use crate::stats::{gaussian_entropy, norm_cdf, norm_log_cdf, norm_pdf, GaussLegendre, LN_2PI};

/// Lower clamp on `Φ(γ)` before logs and divisions.
pub const CDF_FLOOR: f64 = 1e-12;
/// Lower clamp on predictive standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-9;
/// Default Gauss-Legendre nodes per panel for the numerical-integration entropy.
pub const DEFAULT_QUADRATURE_NODES: usize = 128;

/// Entropy approximation for terms below the highest fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Approximation {
    /// Truncated Gaussian on the low-fidelity marginal.
    #[default]
    Tg,
    /// Numerical integration of the density implied by the highest-fidelity bound.
    Ni,
}

impl std::str::FromStr for Approximation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tg" => Ok(Approximation::Tg),
            "ni" => Ok(Approximation::Ni),
            other => Err(Error::arg(format!("unknown approximation '{other}' (expected tg or ni)"))),
        }
    }
}

impl std::fmt::Display for Approximation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Approximation::Tg => "tg",
            Approximation::Ni => "ni",
        })
    }
}

/// One fidelity per objective and the normalized cost of evaluating them jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityVector {
    indices: Vec<usize>,
    normalized_cost: f64,
}

impl FidelityVector {
    /// `costs[j][m - 1]` is the raw cost of objective `j` at fidelity `m`.
    pub fn new(indices: Vec<usize>, costs: &[Vec<f64>]) -> Result<Self> {
        if indices.len() != costs.len() {
            return Err(Error::arg(format!(
                "fidelity vector has {} entries for {} objectives",
                indices.len(),
                costs.len()
            )));
        }
        let mut total = 0.0;
        for (j, (&m, c)) in indices.iter().zip(costs).enumerate() {
            if m == 0 || m > c.len() {
                return Err(Error::arg(format!(
                    "objective {j}: fidelity {m} outside 1..={}",
                    c.len()
                )));
            }
            total += c[m - 1] / c[c.len() - 1];
        }
        Ok(FidelityVector {
            indices,
            normalized_cost: total,
        })
    }

    /// Every objective at its highest fidelity.
    pub fn highest(costs: &[Vec<f64>]) -> Self {
        FidelityVector::new(costs.iter().map(Vec::len).collect(), costs).expect("valid by construction")
    }

    /// The full Cartesian product of fidelities, lexicographic in the indices.
    pub fn enumerate(costs: &[Vec<f64>]) -> Vec<FidelityVector> {
        let mut out = Vec::new();
        let mut idx = vec![1usize; costs.len()];
        loop {
            out.push(FidelityVector::new(idx.clone(), costs).expect("valid by construction"));
            let mut j = costs.len();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if idx[j] < costs[j].len() {
                    idx[j] += 1;
                    break;
                }
                idx[j] = 1;
            }
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn normalized_cost(&self) -> f64 {
        self.normalized_cost
    }

    /// Dash-joined indices, e.g. `2-1`.
    pub fn label(&self) -> String {
        self.indices
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Parses a dash-joined label against a cost table.
    pub fn parse(label: &str, costs: &[Vec<f64>]) -> Result<Self> {
        let indices = label
            .split('-')
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad fidelity vector '{label}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        FidelityVector::new(indices, costs)
    }
}

/// `γ = (upper − μ)/σ` with `φ(γ)` and the clamped `Φ(γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationStats {
    pub gamma: f64,
    pub pdf_at_gamma: f64,
    pub cdf_at_gamma: f64,
}

impl TruncationStats {
    pub fn new(mean: f64, sigma: f64, upper: f64) -> Self {
        let sigma = sigma.max(SIGMA_FLOOR);
        let gamma = (upper - mean) / sigma;
        TruncationStats {
            gamma,
            pdf_at_gamma: norm_pdf(gamma),
            cdf_at_gamma: norm_cdf(gamma).max(CDF_FLOOR),
        }
    }

    /// `ln Φ(γ) − γφ(γ) / (2Φ(γ))`, the entropy change caused by truncation.
    ///
    /// Both terms are taken in log space. Clamping `Φ` separately in each
    /// term breaks their cancellation in the lower tail.
    fn entropy_shift(&self) -> f64 {
        if self.gamma == f64::INFINITY {
            return 0.0;
        }
        if self.gamma == f64::NEG_INFINITY {
            return CDF_FLOOR.ln();
        }
        let log_cdf = norm_log_cdf(self.gamma);
        let mills = (-0.5 * self.gamma * self.gamma - 0.5 * LN_2PI - log_cdf).exp();
        log_cdf - 0.5 * self.gamma * mills
    }
}

/// Entropy of independent Gaussians with the given posterior summaries.
pub fn entropy_unconditioned(summaries: &[PosteriorSummary]) -> Result<f64> {
    let mut h = summaries.len() as f64 * 0.5 * (1.0 + LN_2PI);
    for s in summaries {
        if !(s.variance > 0.0) {
            return Err(Error::Numerical(format!(
                "unconditioned entropy needs positive variance, got {}",
                s.variance
            )));
        }
        h += s.variance.sqrt().ln();
    }
    Ok(h)
}

/// Entropy of `N(mean, sigma²)` truncated to `(-∞, upper]`.
pub fn entropy_truncated_gaussian(mean: f64, sigma: f64, upper: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    Ok(truncated_entropy(mean, sigma, upper))
}

fn truncated_entropy(mean: f64, sigma: f64, upper: f64) -> f64 {
    let sigma = sigma.max(SIGMA_FLOOR);
    gaussian_entropy(sigma) + TruncationStats::new(mean, sigma, upper).entropy_shift()
}

/// Posterior of `y^(M)` given `y^(m)` at the same input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossFidelityConditional {
    /// `σ²^(mM) / σ²^(m)`.
    pub slope: f64,
    pub mean_low: f64,
    pub mean_high: f64,
    /// `σ²^(M) − (σ²^(mM))² / σ²^(m)`, clamped at zero.
    pub cond_var: f64,
}

impl CrossFidelityConditional {
    /// Conditional mean of `y^(M)` after observing `y^(m) = y`.
    pub fn cond_mean(&self, y: f64) -> f64 {
        self.mean_high + self.slope * (y - self.mean_low)
    }
}

/// Conditions the highest fidelity on a lower one through their joint
/// Gaussian posterior. `summary` must carry the cross-covariance to `summary_high`.
pub fn cross_fidelity_conditional(
    summary: &PosteriorSummary,
    summary_high: &PosteriorSummary,
) -> CrossFidelityConditional {
    let var_low = summary.variance.max(SIGMA_FLOOR * SIGMA_FLOOR);
    let cov = summary.cross_cov_to_highest;
    let slope = cov / var_low;
    CrossFidelityConditional {
        slope,
        mean_low: summary.mean,
        mean_high: summary_high.mean,
        cond_var: (summary_high.variance - cov * cov / var_low).max(0.0),
    }
}

/// Cached quadrature rule for [`entropy_ni_with`].
#[derive(Debug, Clone)]
pub struct NiQuadrature {
    rule: GaussLegendre,
}

impl NiQuadrature {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 16 {
            return Err(Error::arg(format!("need at least 16 quadrature nodes, got {nodes}")));
        }
        Ok(NiQuadrature {
            rule: GaussLegendre::new(nodes),
        })
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }
}

/// Entropy of `y^(m)` given `y^(M) ≤ upper`, by one-dimensional quadrature of
///
/// ```text
/// Ψ(y) = Φ((upper − μ_c(y)) / s) · φ((y − μ_m)/σ_m) / (σ_m Φ(γ_M))
/// ```
///
/// renormalized to unit mass.
pub fn entropy_ni(
    summary_m: &PosteriorSummary,
    summary_high: &PosteriorSummary,
    upper: f64,
    quadrature_nodes: usize,
) -> Result<f64> {
    let quad = NiQuadrature::new(quadrature_nodes)?;
    Ok(entropy_ni_with(summary_m, summary_high, upper, &quad))
}

pub fn entropy_ni_with(
    summary_m: &PosteriorSummary,
    summary_high: &PosteriorSummary,
    upper: f64,
    quad: &NiQuadrature,
) -> f64 {
    let sigma_m = summary_m.variance.sqrt().max(SIGMA_FLOOR);
    let sigma_high = summary_high.variance.sqrt().max(SIGMA_FLOOR);
    let cond = cross_fidelity_conditional(summary_m, summary_high);
    let s = cond.cond_var.sqrt();
    let high = TruncationStats::new(summary_high.mean, sigma_high, upper);
    if high.gamma == f64::INFINITY {
        return gaussian_entropy(sigma_m);
    }
    if high.gamma == f64::NEG_INFINITY {
        return gaussian_entropy(sigma_m) + high.entropy_shift();
    }

    // y^(M) is (almost) an affine function of y^(m): the bound maps to a hard
    // truncation of y^(m) at the same standardized level.
    if s <= 1e-8 * sigma_high || s <= SIGMA_FLOOR {
        return gaussian_entropy(sigma_m) + high.entropy_shift();
    }

    let mu = summary_m.mean;
    let mut lo = mu - 8.0 * sigma_m;
    let mut hi = mu + 8.0 * sigma_m;
    let mut breaks: Vec<f64> = Vec::new();
    if cond.slope != 0.0 {
        // Φ((upper − μ_c(y))/s) switches from 1 to 0 around `t` over a width `w`.
        let t = mu + (upper - summary_high.mean) / cond.slope;
        let w = s / cond.slope.abs();
        if cond.slope > 0.0 {
            hi = hi.min(t + 10.0 * w);
        } else {
            lo = lo.max(t - 10.0 * w);
        }
        for k in [-10.0, -2.0, 0.0, 2.0, 10.0] {
            breaks.push(t + k * w);
        }
    }
    if !(hi > lo) {
        return gaussian_entropy(sigma_m) + high.entropy_shift();
    }
    let mut edges = vec![lo];
    breaks.retain(|b| *b > lo && *b < hi);
    breaks.sort_by(f64::total_cmp);
    edges.extend(breaks);
    edges.push(hi);

    let log_norm = norm_log_cdf(high.gamma) + sigma_m.ln();
    let log_psi = |y: f64| {
        let z = (y - mu) / sigma_m;
        norm_log_cdf((upper - cond.cond_mean(y)) / s) - 0.5 * z * z - 0.5 * LN_2PI - log_norm
    };
    let mut mass = 0.0;
    let mut plogp = 0.0;
    for pair in edges.windows(2) {
        for (y, w) in quad.rule.mapped(pair[0], pair[1]) {
            let lp = log_psi(y);
            let p = lp.exp();
            if p > 0.0 {
                mass += w * p;
                plogp += w * p * lp;
            }
        }
    }
    if !(mass > 0.0) {
        return gaussian_entropy(sigma_m) + high.entropy_shift();
    }
    // Entropy of Ψ / Z: −(1/Z)∫Ψ ln Ψ + ln Z.
    -plogp / mass + mass.ln()
}

/// Which side of a sampled front bounds each objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FrontBound {
    /// `y_j ≤ max_i z_j^i`.
    UpperMax,
    /// `y_j ≥ min_i z_j^i`: no input beats the front's best value in any
    /// single objective.
    #[default]
    LowerMin,
}

impl std::str::FromStr for FrontBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper-max" => Ok(FrontBound::UpperMax),
            "lower-min" => Ok(FrontBound::LowerMin),
            other => Err(Error::arg(format!(
                "unknown front bound '{other}' (expected upper-max or lower-min)"
            ))),
        }
    }
}

impl std::fmt::Display for FrontBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrontBound::UpperMax => "upper-max",
            FrontBound::LowerMin => "lower-min",
        })
    }
}

/// Acquisition evaluation settings.
#[derive(Debug, Clone)]
pub struct AcquisitionSettings {
    pub approximation: Approximation,
    pub quadrature: NiQuadrature,
    pub bound: FrontBound,
}

impl AcquisitionSettings {
    pub fn new(approximation: Approximation, quadrature_nodes: usize) -> Result<Self> {
        Ok(AcquisitionSettings {
            approximation,
            quadrature: NiQuadrature::new(quadrature_nodes)?,
            bound: FrontBound::default(),
        })
    }

    pub fn with_bound(mut self, bound: FrontBound) -> Self {
        self.bound = bound;
        self
    }
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        AcquisitionSettings::new(Approximation::Tg, DEFAULT_QUADRATURE_NODES).expect("valid defaults")
    }
}

/// Per-objective, per-fidelity information gain at one input.
///
/// `gain[j][m - 1]` is `H(y_j^(m)) − (1/S) Σ_s H(y_j^(m) | y*_js)`. Because
/// the objectives are independent, the gain of any fidelity vector is the
/// sum of its entries, which lets a candidate be scored against every
/// fidelity vector at once.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub gain: Vec<Vec<f64>>,
}

impl GainTable {
    /// `predictions[j]` holds objective `j`'s summaries at fidelities `1..=M_j`
    /// (as returned by [`MultiFidelityGp::predict_all`]).
    pub fn compute(
        predictions: &[Vec<PosteriorSummary>],
        fronts: &[ParetoFrontSample],
        settings: &AcquisitionSettings,
    ) -> Result<Self> {
        if fronts.is_empty() {
            return Err(Error::InvalidState("no Pareto-front samples available".into()));
        }
        let k = predictions.len();
        if fronts.iter().any(|f| f.per_dim_max.len() != k || f.is_empty()) {
            return Err(Error::InvalidState(
                "Pareto-front sample is empty or has the wrong number of objectives".into(),
            ));
        }
        let s_count = fronts.len() as f64;
        // A lower bound on y is an upper bound on −y; entropies and the
        // cross-covariance are unchanged by the reflection.
        let (sign, bounds): (f64, Vec<&[f64]>) = match settings.bound {
            FrontBound::UpperMax => (1.0, fronts.iter().map(|f| f.per_dim_max.as_slice()).collect()),
            FrontBound::LowerMin => (-1.0, fronts.iter().map(|f| f.per_dim_min.as_slice()).collect()),
        };
        let gain = predictions
            .iter()
            .enumerate()
            .map(|(j, preds)| {
                let top = preds.len();
                let reflect = |p: &PosteriorSummary| PosteriorSummary {
                    mean: sign * p.mean,
                    ..*p
                };
                let high = reflect(&preds[top - 1]);
                preds
                    .iter()
                    .enumerate()
                    .map(|(mi, p)| {
                        let p = reflect(p);
                        let sigma = p.variance.sqrt().max(SIGMA_FLOOR);
                        let marginal = gaussian_entropy(sigma);
                        let conditional: f64 = bounds
                            .iter()
                            .map(|b| {
                                let upper = sign * b[j];
                                if mi + 1 == top {
                                    truncated_entropy(p.mean, sigma, upper)
                                } else {
                                    match settings.approximation {
                                        Approximation::Tg => truncated_entropy(p.mean, sigma, upper),
                                        Approximation::Ni => {
                                            entropy_ni_with(&p, &high, upper, &settings.quadrature)
                                        }
                                    }
                                }
                            })
                            .sum::<f64>()
                            / s_count;
                        marginal - conditional
                    })
                    .collect()
            })
            .collect();
        Ok(GainTable { gain })
    }

    /// Total information gain of `fv` (before dividing by cost).
    pub fn information_gain(&self, fv: &FidelityVector) -> f64 {
        self.gain
            .iter()
            .zip(fv.indices())
            .map(|(g, &m)| g[m - 1])
            .sum()
    }

    /// `α(x, m)`: information gain per unit normalized cost.
    pub fn acquisition(&self, fv: &FidelityVector) -> f64 {
        self.information_gain(fv) / fv.normalized_cost()
    }
}

/// Predictions of every objective at every fidelity for one input.
pub fn predict_objectives(models: &[MultiFidelityGp], x: &[f64]) -> Result<Vec<Vec<PosteriorSummary>>> {
    models.iter().map(|m| m.predict_all(x)).collect()
}

/// `α(x, m)` for one candidate.
pub fn acquisition(
    x: &[f64],
    fv: &FidelityVector,
    models: &[MultiFidelityGp],
    fronts: &[ParetoFrontSample],
    settings: &AcquisitionSettings,
) -> Result<f64> {
    if fv.indices().len() != models.len() {
        return Err(Error::arg("fidelity vector and model count differ"));
    }
    for (m, model) in fv.indices().iter().zip(models) {
        if *m > model.n_fidelities() {
            return Err(Error::arg("fidelity index exceeds the model's fidelity count"));
        }
    }
    let preds = predict_objectives(models, x)?;
    Ok(GainTable::compute(&preds, fronts, settings)?.acquisition(fv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const H_STD: f64 = 1.418_938_533_204_672_7;

    fn summary(mean: f64, variance: f64, cross: f64) -> PosteriorSummary {
        PosteriorSummary { mean, variance, cross_cov_to_highest: cross }
    }

    #[test]
    fn unconditioned_entropy_examples() {
        let one = summary(0.0, 1.0, 1.0);
        assert_relative_eq!(entropy_unconditioned(&[one]).unwrap(), H_STD, epsilon = 1e-12);
        assert_relative_eq!(entropy_unconditioned(&[one, one]).unwrap(), 2.0 * H_STD, epsilon = 1e-12);
        let e = summary(0.0, std::f64::consts::E.powi(2), 0.0);
        assert_relative_eq!(entropy_unconditioned(&[e]).unwrap(), H_STD + 1.0, epsilon = 1e-12);
        assert!(entropy_unconditioned(&[summary(0.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn truncated_entropy_limits() {
        assert_relative_eq!(entropy_truncated_gaussian(0.3, 2.0, f64::INFINITY).unwrap(), H_STD + 2f64.ln());
        assert_relative_eq!(entropy_truncated_gaussian(0.0, 1.0, 1e6).unwrap(), H_STD, epsilon = 1e-12);
        // Half-normal: ½ ln(πe/2).
        let half = 0.5 * (std::f64::consts::PI * std::f64::consts::E / 2.0).ln();
        assert_relative_eq!(entropy_truncated_gaussian(0.0, 1.0, 0.0).unwrap(), half, epsilon = 1e-12);
        assert!(entropy_truncated_gaussian(0.0, 0.0, 1.0).is_err());
        assert!(entropy_truncated_gaussian(0.0, 1.0, f64::NEG_INFINITY).unwrap().is_finite());
    }

    #[test]
    fn truncation_never_raises_entropy() {
        for i in 0..400 {
            let upper = -20.0 + i as f64 * 0.1;
            let h = entropy_truncated_gaussian(0.0, 1.5, upper).unwrap();
            assert!(h <= H_STD + 1.5f64.ln() + 1e-12, "upper {upper}: {h}");
        }
    }

    #[test]
    fn truncated_entropy_is_smooth_in_the_lower_tail() {
        let mut prev = entropy_truncated_gaussian(0.0, 1.0, -5.0).unwrap();
        for i in 1..=400 {
            let upper = -5.0 - i as f64 * 0.05;
            let h = entropy_truncated_gaussian(0.0, 1.0, upper).unwrap();
            assert!(h < prev && prev - h < 0.05, "jump at {upper}: {prev} -> {h}");
            prev = h;
        }
    }

    #[test]
    fn conditional_special_cases() {
        let high = summary(2.0, 0.5, 0.5);
        let c = cross_fidelity_conditional(&high, &high);
        assert_relative_eq!(c.slope, 1.0);
        assert_eq!(c.cond_var, 0.0);
        let low = summary(1.0, 0.8, 0.0);
        let c = cross_fidelity_conditional(&low, &high);
        assert_eq!(c.slope, 0.0);
        assert_relative_eq!(c.cond_var, 0.5);
        assert_eq!(c.cond_mean(-3.0), c.cond_mean(7.0));
    }

    #[test]
    fn ni_degenerates_to_truncated_gaussian() {
        let high = summary(0.4, 0.9, 0.9);
        for upper in [-1.0, 0.0, 0.4, 2.0] {
            let ni = entropy_ni(&high, &high, upper, 128).unwrap();
            let tg = entropy_truncated_gaussian(0.4, 0.9f64.sqrt(), upper).unwrap();
            assert!((ni - tg).abs() < 1e-4, "{ni} vs {tg}");
        }
    }

    #[test]
    fn ni_independence_gives_marginal_entropy() {
        let low = summary(-0.5, 2.0, 0.0);
        let high = summary(0.4, 0.9, 0.9);
        let ni = entropy_ni(&low, &high, 0.1, 128).unwrap();
        assert!((ni - (H_STD + 0.5 * 2f64.ln())).abs() < 1e-4);
    }

    #[test]
    fn ni_requires_enough_nodes() {
        let s = summary(0.0, 1.0, 0.5);
        assert!(entropy_ni(&s, &s, 0.0, 8).is_err());
    }

    #[test]
    fn fidelity_vector_costs() {
        let costs = vec![vec![1.0, 10.0], vec![0.1, 1.0, 10.0]];
        let fv = FidelityVector::new(vec![1, 2], &costs).unwrap();
        assert_relative_eq!(fv.normalized_cost(), 0.1 + 0.1);
        assert_eq!(fv.label(), "1-2");
        assert_eq!(FidelityVector::parse("1-2", &costs).unwrap(), fv);
        assert_eq!(FidelityVector::highest(&costs).normalized_cost(), 2.0);
        let all = FidelityVector::enumerate(&costs);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].indices(), &[1, 1]);
        assert_eq!(all[5].indices(), &[2, 3]);
        assert!(FidelityVector::new(vec![3, 1], &costs).is_err());
        assert!(FidelityVector::parse("1-x", &costs).is_err());
    }

    #[test]
    fn uninformative_front_gives_zero() {
        let preds = vec![vec![summary(0.0, 1.0, 0.8), summary(0.1, 1.2, 1.2)]];
        let front = ParetoFrontSample {
            points: vec![vec![f64::INFINITY]],
            inputs: vec![],
            per_dim_max: vec![f64::INFINITY],
            per_dim_min: vec![f64::NEG_INFINITY],
        };
        let costs = vec![vec![1.0, 10.0]];
        let table = GainTable::compute(&preds, &[front], &AcquisitionSettings::default()).unwrap();
        assert_eq!(table.acquisition(&FidelityVector::highest(&costs)), 0.0);
    }

    #[test]
    fn empty_front_list_is_invalid_state() {
        let preds = vec![vec![summary(0.0, 1.0, 1.0)]];
        let err = GainTable::compute(&preds, &[], &AcquisitionSettings::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn single_objective_matches_max_value_entropy_search() {
        let p = summary(0.2, 0.6, 0.6);
        let front = ParetoFrontSample::from_points(vec![vec![-0.4]], vec![]).unwrap();
        let settings = AcquisitionSettings::default().with_bound(FrontBound::UpperMax);
        let table = GainTable::compute(&[vec![p]], &[front], &settings).unwrap();
        let sigma = 0.6f64.sqrt();
        let g = (-0.4 - 0.2) / sigma;
        let mes = g * norm_pdf(g) / (2.0 * norm_cdf(g)) - norm_cdf(g).ln();
        let fv = FidelityVector::new(vec![1], &[vec![5.0]]).unwrap();
        assert_relative_eq!(table.acquisition(&fv) * fv.normalized_cost(), mes, epsilon = 1e-12);
    }
}
