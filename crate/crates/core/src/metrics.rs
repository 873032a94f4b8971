//! Pareto hypervolume (minimization, bounded by a reference point).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moo::dominates_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypervolumeMethod {
    ExactSweep2d,
    RecursiveNd,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypervolumeResult {
    pub value: f64,
    pub reference_point: Vec<f64>,
    pub method: HypervolumeMethod,
    /// Points dropped because they do not dominate the reference point.
    pub excluded: usize,
}

/// Exact hypervolume dominated by `front` and bounded by `reference`.
/// Two objectives use a sorted sweep, more use recursive slicing.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<HypervolumeResult> {
    let (pts, excluded) = admissible(front, reference)?;
    let method = if reference.len() == 2 {
        HypervolumeMethod::ExactSweep2d
    } else {
        HypervolumeMethod::RecursiveNd
    };
    let value = match method {
        HypervolumeMethod::ExactSweep2d => sweep_2d(pts, reference),
        _ => slice_recursive(pts, reference, reference.len()),
    };
    Ok(HypervolumeResult {
        value,
        reference_point: reference.to_vec(),
        method,
        excluded,
    })
}

/// Exact hypervolume by recursive slicing, for any number of objectives.
pub fn hypervolume_recursive(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let (pts, _) = admissible(front, reference)?;
    Ok(slice_recursive(pts, reference, reference.len()))
}

/// Monte-Carlo estimate from `samples` uniform draws in the box spanned by
/// the componentwise minimum of `front` and `reference`.
pub fn hypervolume_monte_carlo(
    front: &[Vec<f64>],
    reference: &[f64],
    samples: usize,
    seed: u64,
) -> Result<HypervolumeResult> {
    let (pts, excluded) = admissible(front, reference)?;
    let mut value = 0.0;
    if !pts.is_empty() && samples > 0 {
        let k = reference.len();
        let lo: Vec<f64> = (0..k)
            .map(|j| pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let volume: f64 = lo.iter().zip(reference).map(|(l, r)| r - l).product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        let mut u = vec![0.0; k];
        for _ in 0..samples {
            for j in 0..k {
                u[j] = lo[j] + rng.random::<f64>() * (reference[j] - lo[j]);
            }
            if pts.iter().any(|p| p.iter().zip(&u).all(|(a, b)| a <= b)) {
                hits += 1;
            }
        }
        value = volume * hits as f64 / samples as f64;
    }
    Ok(HypervolumeResult {
        value,
        reference_point: reference.to_vec(),
        method: HypervolumeMethod::MonteCarlo,
        excluded,
    })
}

/// `HV(reference_front) − HV(recommended)`, floored at zero.
pub fn phv_difference(
    recommended: &[Vec<f64>],
    reference_front: &[Vec<f64>],
    reference_point: &[f64],
) -> Result<f64> {
    let ideal = hypervolume(reference_front, reference_point)?.value;
    let got = hypervolume(recommended, reference_point)?.value;
    Ok((ideal - got).max(0.0))
}

/// Objective counts up to this use exact hypervolume in [`phv_difference_auto`].
pub const EXACT_HV_MAX_OBJECTIVES: usize = 3;
/// Draws used by [`phv_difference_auto`] above [`EXACT_HV_MAX_OBJECTIVES`].
pub const PHV_MONTE_CARLO_SAMPLES: usize = 20_000;

/// `HV(reference_front) − HV(recommended)` estimated from one shared set of
/// uniform draws, so both volumes see the same sampling noise.
pub fn phv_difference_monte_carlo(
    recommended: &[Vec<f64>],
    reference_front: &[Vec<f64>],
    reference_point: &[f64],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let (rec, _) = admissible(recommended, reference_point)?;
    let (truth, _) = admissible(reference_front, reference_point)?;
    let k = reference_point.len();
    let lo: Vec<f64> = (0..k)
        .map(|j| {
            rec.iter()
                .chain(&truth)
                .map(|p| p[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if lo.iter().any(|v| !v.is_finite()) || samples == 0 {
        return Ok(0.0);
    }
    let volume: f64 = lo.iter().zip(reference_point).map(|(l, r)| r - l).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let covered = |pts: &[Vec<f64>], u: &[f64]| pts.iter().any(|p| p.iter().zip(u).all(|(a, b)| a <= b));
    let mut balance: i64 = 0;
    let mut u = vec![0.0; k];
    for _ in 0..samples {
        for j in 0..k {
            u[j] = lo[j] + rng.random::<f64>() * (reference_point[j] - lo[j]);
        }
        balance += covered(&truth, &u) as i64 - covered(&rec, &u) as i64;
    }
    Ok((volume * balance as f64 / samples as f64).max(0.0))
}

/// Exact PHV difference for few objectives, shared-draw Monte Carlo otherwise.
pub fn phv_difference_auto(
    recommended: &[Vec<f64>],
    reference_front: &[Vec<f64>],
    reference_point: &[f64],
    seed: u64,
) -> Result<f64> {
    if reference_point.len() <= EXACT_HV_MAX_OBJECTIVES {
        phv_difference(recommended, reference_front, reference_point)
    } else {
        phv_difference_monte_carlo(recommended, reference_front, reference_point, PHV_MONTE_CARLO_SAMPLES, seed)
    }
}

/// Hypervolume for few objectives exactly, by Monte Carlo otherwise.
pub fn hypervolume_auto(front: &[Vec<f64>], reference_point: &[f64], seed: u64) -> Result<f64> {
    if reference_point.len() <= EXACT_HV_MAX_OBJECTIVES {
        Ok(hypervolume(front, reference_point)?.value)
    } else {
        Ok(hypervolume_monte_carlo(front, reference_point, PHV_MONTE_CARLO_SAMPLES, seed)?.value)
    }
}

/// Componentwise maximum of `front` pushed out by `margin` times its range.
pub fn reference_point_for(front: &[Vec<f64>], margin: f64) -> Result<Vec<f64>> {
    let first = front
        .first()
        .ok_or_else(|| Error::arg("cannot place a reference point for an empty front"))?;
    Ok((0..first.len())
        .map(|j| {
            let hi = front.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
            let lo = front.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
            let span = if hi > lo { hi - lo } else { hi.abs().max(1.0) };
            hi + margin * span
        })
        .collect())
}

fn admissible(front: &[Vec<f64>], reference: &[f64]) -> Result<(Vec<Vec<f64>>, usize)> {
    if reference.is_empty() {
        return Err(Error::arg("reference point must have at least one objective"));
    }
    if front.is_empty() {
        log::debug!("hypervolume of an empty front is zero");
    }
    let mut excluded = 0;
    let mut pts = Vec::with_capacity(front.len());
    for p in front {
        if p.len() != reference.len() {
            return Err(Error::arg(format!(
                "front point has {} objectives, reference has {}",
                p.len(),
                reference.len()
            )));
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::arg("front point contains NaN"));
        }
        if p.iter().zip(reference).all(|(a, r)| a <= r) {
            pts.push(p.clone());
        } else {
            excluded += 1;
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} front point(s) do not dominate the reference point and were excluded");
    }
    Ok((pts, excluded))
}

fn sweep_2d(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Slices along the last of the first `k` coordinates; each slab's
/// cross-section is the `(k−1)`-dimensional volume of the points below it.
fn slice_recursive(pts: Vec<Vec<f64>>, reference: &[f64], k: usize) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    if k == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return reference[0] - lo;
    }
    if k == 2 {
        return sweep_2d(pts, reference);
    }
    let axis = k - 1;
    let mut pts = pts;
    pts.sort_by(|a, b| a[axis].total_cmp(&b[axis]));
    let mut volume = 0.0;
    let mut active: Vec<Vec<f64>> = Vec::new();
    for i in 0..pts.len() {
        let projected: Vec<f64> = pts[i][..axis].to_vec();
        if !active
            .iter()
            .any(|q| q == &projected || dominates_unchecked(q, &projected))
        {
            active.retain(|q| !dominates_unchecked(&projected, q));
            active.push(projected);
        }
        let upper = if i + 1 < pts.len() {
            pts[i + 1][axis]
        } else {
            reference[axis]
        };
        let depth = upper - pts[i][axis];
        if depth > 0.0 {
            volume += depth * slice_recursive(active.clone(), reference, axis);
        }
    }
    volume
}
