//! Approximate posterior sample paths of an objective's highest fidelity.
//!
//! Each squared-exponential block of the multi-fidelity kernel gets a random
//! Fourier feature map `φ(x) = sqrt(2σ²/D) cos(Ωx + b)`. A fidelity-`m`
//! feature vector stacks the base block with `m - 1` copies of the error
//! block (one per independent error process), zero-filling the remaining
//! slots, so `φ_m(x)ᵀφ_m'(x') ≈ k((x, m), (x', m'))`. Weights are drawn from
//! the Bayesian linear-regression posterior
//! `θ | D ~ N(A⁻¹Φᵀy, σ²A⁻¹)`, `A = ΦᵀΦ + σ²I`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gp::{factorize, KernelParams, MultiFidelityGp};

/// Default number of features per kernel block.
pub const DEFAULT_FEATURES: usize = 500;

/// Random Fourier features for one squared-exponential kernel.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    /// `n_features × d`; row `i` is frequency `ω_i`.
    frequencies: DMatrix<f64>,
    /// The same frequencies, row-major, for the evaluation loops.
    rows: Vec<f64>,
    phases: Vec<f64>,
    amplitude: f64,
}

impl FeatureMap {
    fn draw<R: Rng>(lengthscales: &[f64], variance: f64, n: usize, rng: &mut R) -> Self {
        let d = lengthscales.len();
        let mut frequencies = DMatrix::zeros(n, d);
        for i in 0..n {
            for (j, l) in lengthscales.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                frequencies[(i, j)] = z / l;
            }
        }
        let phases = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let rows = frequencies.transpose().as_slice().to_vec();
        FeatureMap {
            frequencies,
            rows,
            phases,
            amplitude: (2.0 * variance / n as f64).sqrt(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn frequencies(&self) -> &DMatrix<f64> {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Writes `φ(x)` into `out`.
    fn fill(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for ((o, b), w) in out.iter_mut().zip(&self.phases).zip(self.rows.chunks_exact(d)) {
            let arg = b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            *o = self.amplitude * arg.cos();
        }
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features()];
        self.fill(x, &mut out);
        out
    }

    fn dot(&self, x: &[f64], w: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for ((wi, b), row) in w.iter().zip(&self.phases).zip(self.rows.chunks_exact(d)) {
            let arg = b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            acc += wi * arg.cos();
        }
        self.amplitude * acc
    }
}

/// How observations below the highest fidelity enter the weight posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowFidelityConditioning {
    /// Rows use the feature vector of the observation's own fidelity.
    #[default]
    Blocked,
    /// Rows use the highest-fidelity feature vector regardless of fidelity.
    Unified,
}

/// Stacked feature map spanning every fidelity of one objective.
#[derive(Debug, Clone)]
pub struct FidelityFeatureMap {
    base: FeatureMap,
    error: FeatureMap,
    n_fidelities: usize,
}

impl FidelityFeatureMap {
    pub fn base(&self) -> &FeatureMap {
        &self.base
    }

    pub fn error(&self) -> &FeatureMap {
        &self.error
    }

    pub fn n_fidelities(&self) -> usize {
        self.n_fidelities
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Length of a stacked feature vector (and of the weight vector).
    pub fn n_weights(&self) -> usize {
        self.base.n_features() + (self.n_fidelities - 1) * self.error.n_features()
    }

    /// `φ_m(x)`: base block, then `m - 1` error blocks, zeros after.
    pub fn features_at(&self, x: &[f64], m: usize) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::arg(format!(
                "input has dimension {}, feature map expects {}",
                x.len(),
                self.dim()
            )));
        }
        if m == 0 || m > self.n_fidelities {
            return Err(Error::arg(format!("fidelity {m} outside 1..={}", self.n_fidelities)));
        }
        Ok(self.features_unchecked(x, m))
    }

    fn features_unchecked(&self, x: &[f64], m: usize) -> Vec<f64> {
        let nb = self.base.n_features();
        let ne = self.error.n_features();
        let mut out = vec![0.0; self.n_weights()];
        self.base.fill(x, &mut out[..nb]);
        if m > 1 {
            let err = self.error.features(x);
            for block in 0..m - 1 {
                out[nb + block * ne..nb + (block + 1) * ne].copy_from_slice(&err);
            }
        }
        out
    }
}

/// Random Fourier features for the kernel of `params` up to `highest_fidelity`.
pub fn build_feature_map(
    params: &KernelParams,
    highest_fidelity: usize,
    n_features: usize,
    seed: u64,
) -> Result<FidelityFeatureMap> {
    params.validate()?;
    if n_features == 0 {
        return Err(Error::arg("need at least one random feature"));
    }
    if highest_fidelity == 0 {
        return Err(Error::arg("fidelity indices start at 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = FeatureMap::draw(&params.base_lengthscales, params.base_variance, n_features, &mut rng);
    let error = FeatureMap::draw(&params.error_lengthscales, params.error_variance, n_features, &mut rng);
    Ok(FidelityFeatureMap {
        base,
        error,
        n_fidelities: highest_fidelity,
    })
}

/// One training target projected for the weight posterior.
#[derive(Debug, Clone, Copy)]
pub struct WeightData<'a> {
    pub input: &'a [f64],
    pub fidelity: usize,
    pub value: f64,
}

/// A finitely parametrized sample `x ↦ offset + scale · φ_M(x)ᵀθ`.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    feature_map: Arc<FidelityFeatureMap>,
    weights: DVector<f64>,
    /// Base-block weights followed by the error weights summed over blocks.
    folded: (Vec<f64>, Vec<f64>),
    offset: f64,
    scale: f64,
}

impl SampledFunction {
    pub fn new(feature_map: Arc<FidelityFeatureMap>, weights: DVector<f64>) -> Result<Self> {
        if weights.len() != feature_map.n_weights() {
            return Err(Error::arg(format!(
                "expected {} weights, got {}",
                feature_map.n_weights(),
                weights.len()
            )));
        }
        let nb = feature_map.base.n_features();
        let ne = feature_map.error.n_features();
        let base = weights.as_slice()[..nb].to_vec();
        let mut err = vec![0.0; ne];
        for block in 0..feature_map.n_fidelities - 1 {
            for (e, w) in err.iter_mut().zip(&weights.as_slice()[nb + block * ne..nb + (block + 1) * ne]) {
                *e += w;
            }
        }
        Ok(SampledFunction {
            feature_map,
            weights,
            folded: (base, err),
            offset: 0.0,
            scale: 1.0,
        })
    }

    /// Reports values as `offset + scale · φᵀθ`.
    pub fn with_output_transform(mut self, offset: f64, scale: f64) -> Self {
        self.offset = offset;
        self.scale = scale;
        self
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn feature_map(&self) -> &FidelityFeatureMap {
        &self.feature_map
    }

    /// Value of the sampled highest-fidelity function at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_map.dim() {
            return Err(Error::arg(format!(
                "input has dimension {}, sample expects {}",
                x.len(),
                self.feature_map.dim()
            )));
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let fm = &self.feature_map;
        let mut v = fm.base.dot(x, &self.folded.0);
        if fm.n_fidelities > 1 {
            v += fm.error.dot(x, &self.folded.1);
        }
        self.offset + self.scale * v
    }
}

/// Draws `θ ~ N(A⁻¹Φᵀy, σ²A⁻¹)`; with no data, `θ ~ N(0, I)`.
///
/// When there are fewer observations than weights the draw uses the
/// equivalent observation-space update
/// `θ = θ₀ + Φᵀ(ΦΦᵀ + σ²I)⁻¹(y − Φθ₀ − ε)` with `θ₀ ~ N(0, I)`, `ε ~ N(0, σ²I)`,
/// which has the same distribution at `O(n²D)` instead of `O(D³)` cost.
pub fn draw_posterior_weights(
    map: Arc<FidelityFeatureMap>,
    data: &[WeightData<'_>],
    noise_variance: f64,
    conditioning: LowFidelityConditioning,
    seed: u64,
) -> Result<SampledFunction> {
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::arg("noise variance must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dw = map.n_weights();
    let prior = DVector::from_iterator(dw, (0..dw).map(|_| rng.sample::<f64, _>(StandardNormal)));
    if data.is_empty() {
        return SampledFunction::new(map, prior);
    }
    let phi = design_matrix(&map, data, conditioning)?;
    let y = DVector::from_iterator(data.len(), data.iter().map(|d| d.value));
    let n = data.len();
    let weights = if dw <= n {
        let mut a = phi.tr_mul(&phi);
        for i in 0..dw {
            a[(i, i)] += noise_variance;
        }
        let chol = factorize(&a)?;
        let mean = chol.solve(&phi.tr_mul(&y));
        let z = DVector::from_iterator(dw, (0..dw).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // σ L⁻ᵀ z has covariance σ² A⁻¹.
        let dev = chol
            .l()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular weight precision".into()))?;
        mean + dev * noise_variance.sqrt()
    } else {
        let mut k = &phi * phi.transpose();
        for i in 0..n {
            k[(i, i)] += noise_variance;
        }
        let chol = factorize(&k)?;
        let eps = DVector::from_iterator(
            n,
            (0..n).map(|_| noise_variance.sqrt() * rng.sample::<f64, _>(StandardNormal)),
        );
        let resid = &y - &phi * &prior - eps;
        &prior + phi.tr_mul(&chol.solve(&resid))
    };
    SampledFunction::new(map, weights)
}

/// `A⁻¹Φᵀy`, the mean of the weight posterior.
pub fn posterior_weight_mean(
    map: &FidelityFeatureMap,
    data: &[WeightData<'_>],
    noise_variance: f64,
    conditioning: LowFidelityConditioning,
) -> Result<DVector<f64>> {
    let dw = map.n_weights();
    if data.is_empty() {
        return Ok(DVector::zeros(dw));
    }
    let phi = design_matrix(map, data, conditioning)?;
    let y = DVector::from_iterator(data.len(), data.iter().map(|d| d.value));
    let mut a = phi.tr_mul(&phi);
    for i in 0..dw {
        a[(i, i)] += noise_variance;
    }
    Ok(factorize(&a)?.solve(&phi.tr_mul(&y)))
}

fn design_matrix(
    map: &FidelityFeatureMap,
    data: &[WeightData<'_>],
    conditioning: LowFidelityConditioning,
) -> Result<DMatrix<f64>> {
    let mut phi = DMatrix::zeros(data.len(), map.n_weights());
    for (r, d) in data.iter().enumerate() {
        let m = match conditioning {
            LowFidelityConditioning::Blocked => d.fidelity,
            LowFidelityConditioning::Unified => map.n_fidelities,
        };
        let row = map.features_at(d.input, m)?;
        for (c, v) in row.into_iter().enumerate() {
            phi[(r, c)] = v;
        }
    }
    Ok(phi)
}

/// Samples the highest-fidelity function of `model`'s posterior, conditioning
/// on all of its observations.
pub fn sample_highest_fidelity(
    model: &MultiFidelityGp,
    n_features: usize,
    conditioning: LowFidelityConditioning,
    seed: u64,
) -> Result<SampledFunction> {
    let map = Arc::new(build_feature_map(
        model.params(),
        model.n_fidelities(),
        n_features,
        seed,
    )?);
    let targets = model.internal_targets();
    let data: Vec<WeightData<'_>> = model
        .observations()
        .iter()
        .zip(&targets)
        .map(|(o, v)| WeightData {
            input: &o.input,
            fidelity: o.fidelity,
            value: *v,
        })
        .collect();
    let (offset, scale) = model.output_transform();
    Ok(draw_posterior_weights(
        map,
        &data,
        model.params().noise_variance,
        conditioning,
        seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
    )?
    .with_output_transform(offset, scale))
}
