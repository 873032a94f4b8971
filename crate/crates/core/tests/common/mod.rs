//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use mfosemo::gp::{FidelityObservation, KernelParams};
use mfosemo::optimizer::CampaignConfig;
use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn se(x: &[f64], y: &[f64], ls: &[f64], var: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += ((x[i] - y[i]) / ls[i]).powi(2);
    }
    var * (-0.5 * s).exp()
}

pub fn oracle_kernel(p: &KernelParams, x: &[f64], m: usize, y: &[f64], m2: usize) -> f64 {
    let shared = m.min(m2) as f64 - 1.0;
    se(x, y, &p.base_lengthscales, p.base_variance) + shared * se(x, y, &p.error_lengthscales, p.error_variance)
}

pub fn random_params(rng: &mut ChaCha8Rng, dim: usize) -> KernelParams {
    KernelParams::new(
        (0..dim).map(|_| rng.random_range(0.2..1.0)).collect(),
        rng.random_range(0.5..2.0),
        (0..dim).map(|_| rng.random_range(0.2..1.0)).collect(),
        rng.random_range(0.05..0.5),
        rng.random_range(1e-2..1e-1),
    )
    .unwrap()
}

pub fn random_data(rng: &mut ChaCha8Rng, n: usize, dim: usize, fids: usize) -> Vec<FidelityObservation> {
    (0..n)
        .map(|_| FidelityObservation {
            input: (0..dim).map(|_| rng.random::<f64>()).collect(),
            fidelity: rng.random_range(1..=fids),
            value: rng.random_range(-2.0..2.0),
            raw_cost: 1.0,
        })
        .collect()
}

/// Posterior `(mean, variance, cross-covariance to fidelity top)` by LU solves
/// against the dense Gram matrix.
pub fn dense_posterior(
    p: &KernelParams,
    data: &[FidelityObservation],
    x: &[f64],
    m: usize,
    top: usize,
) -> (f64, f64, f64) {
    let n = data.len();
    let jitter = 1e-10;
    let k = DMatrix::from_fn(n, n, |i, j| {
        oracle_kernel(p, &data[i].input, data[i].fidelity, &data[j].input, data[j].fidelity)
            + if i == j { p.noise_variance + jitter } else { 0.0 }
    });
    let y = DVector::from_iterator(n, data.iter().map(|o| o.value));
    let km = DVector::from_iterator(n, data.iter().map(|o| oracle_kernel(p, x, m, &o.input, o.fidelity)));
    let kt = DVector::from_iterator(n, data.iter().map(|o| oracle_kernel(p, x, top, &o.input, o.fidelity)));
    let lu = k.lu();
    let a = lu.solve(&y).unwrap();
    let b = lu.solve(&kt).unwrap();
    let c = lu.solve(&km).unwrap();
    let mean = km.dot(&a);
    let var = oracle_kernel(p, x, m, x, m) - km.dot(&c);
    let cross = oracle_kernel(p, x, m, x, top) - km.dot(&b);
    (mean, var, cross)
}

fn ln_normal_pdf(y: f64, mean: f64, sigma: f64) -> f64 {
    let z = (y - mean) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Entropy of `N(mean, sigma²)` restricted to `y ≤ upper`, from rejection
/// samples. The normalizer is the empirical acceptance rate.
pub fn mc_truncated_entropy(mean: f64, sigma: f64, upper: f64, accepted: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut drawn = 0usize;
    let mut kept = 0usize;
    let mut sum_ln = 0.0;
    while kept < accepted {
        let z: f64 = rng.sample(StandardNormal);
        let y = mean + sigma * z;
        drawn += 1;
        if y <= upper {
            kept += 1;
            sum_ln += ln_normal_pdf(y, mean, sigma);
        }
    }
    let ln_z = (kept as f64 / drawn as f64).ln();
    -(sum_ln / kept as f64) + ln_z
}

const PHI_LO: f64 = -12.0;
const PHI_STEP: f64 = 1e-3;

/// Standard normal CDF from a table built by Simpson integration of the
/// density, independent of any erf implementation. Linear interpolation
/// between nodes is accurate to about 1e-8.
pub fn phi_cdf(z: f64) -> f64 {
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = (2.0 * -PHI_LO / PHI_STEP) as usize;
        let mut acc = vec![0.0; n + 1];
        for i in 0..n {
            let a = PHI_LO + i as f64 * PHI_STEP;
            let b = a + PHI_STEP;
            acc[i + 1] = acc[i] + PHI_STEP / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        acc
    });
    let t = (z - PHI_LO) / PHI_STEP;
    if t <= 0.0 {
        return 0.0;
    }
    let i = t.floor() as usize;
    if i + 1 >= table.len() {
        return 1.0;
    }
    let frac = t - i as f64;
    table[i] * (1.0 - frac) + table[i + 1] * frac
}

/// Conditional of `y_high` on `y_low` from the inverse of the 2×2 joint
/// covariance: returns `(mean(y), variance)`.
pub fn conditional_from_precision(
    mean_low: f64,
    mean_high: f64,
    var_low: f64,
    var_high: f64,
    cov: f64,
) -> (impl Fn(f64) -> f64, f64) {
    let p = Matrix2::new(var_low, cov, cov, var_high).try_inverse().unwrap();
    let var = 1.0 / p[(1, 1)];
    let k = p[(1, 0)] / p[(1, 1)];
    (move |y: f64| mean_high - k * (y - mean_low), var)
}

/// Entropy of `y_low` given `y_high ≤ upper` by importance sampling from the
/// low-fidelity marginal. Each draw is weighted by `P(y_high ≤ upper | y_low)`
/// and the normalizer is the mean weight.
pub fn is_ni_entropy(
    mean_low: f64,
    mean_high: f64,
    var_low: f64,
    var_high: f64,
    cov: f64,
    upper: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let (cond_mean, cond_var) = conditional_from_precision(mean_low, mean_high, var_low, var_high, cov);
    let sd_low = var_low.sqrt();
    let sd_c = cond_var.sqrt();
    let mut w_sum = 0.0;
    let mut w_ln = 0.0;
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let y = mean_low + sd_low * z;
        let w = phi_cdf((upper - cond_mean(y)) / sd_c);
        if w > 0.0 {
            w_sum += w;
            w_ln += w * (ln_normal_pdf(y, mean_low, sd_low) + w.ln());
        }
    }
    let ln_norm = (w_sum / samples as f64).ln();
    -(w_ln / w_sum) + ln_norm
}

/// Indices of points no other point weakly dominates with a strict
/// improvement somewhere, by all-pairs comparison.
pub fn brute_force_rank0(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !(0..points.len()).any(|j| {
                j != i
                    && points[j].iter().zip(&points[i]).all(|(a, b)| a <= b)
                    && points[j].iter().zip(&points[i]).any(|(a, b)| a < b)
            })
        })
        .collect()
}

/// Fraction of uniform draws in the box `[lo, reference]` dominated by some
/// front point, times the box volume.
pub fn mc_hypervolume(front: &[Vec<f64>], reference: &[f64], lo: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let k = reference.len();
    let vol: f64 = (0..k).map(|j| reference[j] - lo[j]).product();
    let mut u = vec![0.0; k];
    let mut hits = 0usize;
    for _ in 0..samples {
        for j in 0..k {
            u[j] = rng.random_range(lo[j]..reference[j]);
        }
        if front.iter().any(|p| p.iter().zip(&u).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    vol * hits as f64 / samples as f64
}

/// Points on the positive part of the unit sphere, hence mutually
/// non-dominated.
pub fn random_front(k: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0f64)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter().map(|a| a / norm).collect()
        })
        .collect()
}

/// Small campaign settings for fast end-to-end tests.
pub fn quick_config(budget: f64) -> CampaignConfig {
    CampaignConfig {
        total_budget: budget,
        candidate_grid_size: 64,
        n_features: 50,
        nsga_population: 20,
        nsga_generations: 10,
        recommend_grid_size: 200,
        recommend_generations: 5,
        fit_max_evals: 40,
        front_effort: 10_000,
        ..CampaignConfig::default()
    }
}
