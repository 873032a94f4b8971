//! The budgeted outer loop: fit models, sample Pareto fronts, pick the
//! `(input, fidelity vector)` with the highest information gain per unit cost,
//! evaluate it, repeat until the budget runs out.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    predict_objectives, AcquisitionSettings, Approximation, FidelityVector, FrontBound, GainTable,
};
use crate::benchmarks::{BenchmarkProblem, CONVERGENCE_FRACTION, DEFAULT_FRONT_EFFORT};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::{FidelityObservation, KernelParams, MultiFidelityGp};
use crate::metrics::{hypervolume_auto, phv_difference_auto};
use crate::moo::{nsga2_minimize, nsga2_with_seeds, Nsga2Config, ParetoFrontSample};
use crate::rff::{sample_highest_fidelity, LowFidelityConditioning};
use crate::sobol::Sobol;

/// Campaign settings. Every field has a default, so a partial JSON object is
/// a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// `λ_Total`, in units of normalized cost.
    #[serde(alias = "budget")]
    pub total_budget: f64,
    /// Pareto-front samples `S` per iteration.
    pub mc_samples: usize,
    pub approximation: Approximation,
    /// Side of each sampled front that bounds the objectives.
    pub front_bound: FrontBound,
    pub quadrature_nodes: usize,
    #[serde(alias = "grid_size")]
    pub candidate_grid_size: usize,
    pub seed: u64,
    /// Refit hyperparameters after this many evaluations.
    pub refit_interval: usize,
    /// Nelder-Mead restarts for the fit after the initial design.
    pub initial_fit_restarts: usize,
    /// Restarts for later refits; the first restart is warm-started.
    pub fit_restarts: usize,
    pub fit_max_evals: usize,
    /// Random features per kernel block.
    pub n_features: usize,
    /// Initial points at each lower fidelity.
    pub initial_per_lower_fidelity: usize,
    /// Initial points at the highest fidelity vector.
    pub initial_highest: usize,
    pub nsga_population: usize,
    pub nsga_generations: usize,
    /// Grid size used to recommend a front from the posterior mean.
    pub recommend_grid_size: usize,
    /// NSGA-II generations polishing the recommended front on the posterior mean.
    pub recommend_generations: usize,
    /// Random-search and NSGA-II evaluations spent on the reference front.
    pub front_effort: usize,
    pub front_seed: u64,
    /// Measure the PHV difference after every iteration.
    pub track_phv: bool,
    /// Stop on the first failed evaluation instead of skipping it.
    pub abort_on_evaluation_error: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            total_budget: 60.0,
            mc_samples: 1,
            approximation: Approximation::Tg,
            front_bound: FrontBound::default(),
            quadrature_nodes: crate::acquisition::DEFAULT_QUADRATURE_NODES,
            candidate_grid_size: 1000,
            seed: 0,
            refit_interval: 5,
            initial_fit_restarts: 3,
            fit_restarts: 1,
            fit_max_evals: 150,
            n_features: crate::rff::DEFAULT_FEATURES,
            initial_per_lower_fidelity: 5,
            initial_highest: 1,
            nsga_population: 100,
            nsga_generations: 100,
            recommend_grid_size: 10_000,
            recommend_generations: 100,
            front_effort: DEFAULT_FRONT_EFFORT,
            front_seed: 0,
            track_phv: true,
            abort_on_evaluation_error: false,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.total_budget > 0.0) || !self.total_budget.is_finite() {
            return fail("total_budget must be positive and finite");
        }
        if self.mc_samples == 0 {
            return fail("mc_samples must be at least 1");
        }
        if self.quadrature_nodes < 16 {
            return fail("quadrature_nodes must be at least 16");
        }
        if self.candidate_grid_size == 0 || self.recommend_grid_size == 0 {
            return fail("grid sizes must be positive");
        }
        if self.refit_interval == 0 {
            return fail("refit_interval must be at least 1");
        }
        if self.n_features == 0 {
            return fail("n_features must be positive");
        }
        if self.nsga_population < 2 {
            return fail("nsga_population must be at least 2");
        }
        if self.initial_highest == 0 {
            return fail("initial_highest must be at least 1");
        }
        if self.track_phv && self.front_effort < 10_000 {
            return fail("front_effort must be at least 10000");
        }
        Ok(())
    }

    fn nsga(&self) -> Nsga2Config {
        Nsga2Config {
            population_size: self.nsga_population,
            generations: self.nsga_generations,
            ..Nsga2Config::default()
        }
    }
}

/// One evaluated `(input, fidelity vector)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    /// 0 for the initial design, then 1, 2, ... per BO iteration.
    pub iteration: usize,
    pub input: Vec<f64>,
    pub fidelity_vector: FidelityVector,
    pub outputs: Vec<f64>,
    pub cumulative_cost: f64,
    /// Acquisition value that selected this point (`None` in the initial design).
    pub acquisition: Option<f64>,
}

/// The chosen next query.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub input: Vec<f64>,
    pub fidelity_vector: FidelityVector,
    pub acquisition: f64,
}

/// The true front a campaign is scored against.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub front: Arc<Vec<Vec<f64>>>,
    pub point: Vec<f64>,
    pub hypervolume: f64,
}

impl ReferenceData {
    pub fn for_problem(problem: &BenchmarkProblem, effort: usize, seed: u64) -> Result<Self> {
        let front = problem.reference_front(effort, seed)?;
        let point = problem.reference_point(effort, seed)?;
        let hypervolume = hypervolume_auto(&front, &point, seed)?;
        Ok(ReferenceData { front, point, hypervolume })
    }

    /// PHV difference at or below which a campaign counts as converged.
    pub fn convergence_threshold(&self) -> f64 {
        CONVERGENCE_FRACTION * self.hypervolume
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub records: Vec<EvaluationRecord>,
    /// PHV difference after each record; NaN where it was not measured
    /// (inside the initial design, or with tracking off).
    pub phv_trace: Vec<f64>,
    pub n_initial: usize,
    pub reference: Option<ReferenceData>,
    pub models: Vec<MultiFidelityGp>,
}

impl CampaignResult {
    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_cost)
    }

    pub fn final_phv(&self) -> Option<f64> {
        self.phv_trace.iter().rev().copied().find(|v| !v.is_nan())
    }

    /// Cumulative cost of the first record whose PHV difference is at or below `threshold`.
    pub fn convergence_cost(&self, threshold: f64) -> Option<f64> {
        self.records
            .iter()
            .zip(&self.phv_trace)
            .find(|(_, p)| !p.is_nan() && **p <= threshold)
            .map(|(r, _)| r.cumulative_cost)
    }
}

/// SplitMix64 finalizer over `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const STREAM_DESIGN: u64 = 1;
const STREAM_GRID: u64 = 2;
const STREAM_FRONT: u64 = 3;
const STREAM_FIT: u64 = 4;
const STREAM_RECOMMEND: u64 = 5;
const STREAM_PHV: u64 = 6;
const STREAM_STEP: u64 = 7;

/// Fidelity vectors of the initial design: `per_lower` points at each lower
/// level `l`, where objective `j` uses `min(l, M_j − 1)`, then `highest`
/// points with every objective at its top fidelity.
fn design_plan(problem: &BenchmarkProblem, config: &CampaignConfig) -> Vec<FidelityVector> {
    let costs = problem.costs();
    let counts = problem.fidelity_counts();
    let max_m = counts.iter().copied().max().unwrap_or(1);
    let mut plan = Vec::new();
    for level in 1..max_m {
        let idx: Vec<usize> = counts
            .iter()
            .map(|&m| if m > 1 { level.min(m - 1) } else { 1 })
            .collect();
        let fv = FidelityVector::new(idx, &costs).expect("valid by construction");
        plan.extend(std::iter::repeat_n(fv, config.initial_per_lower_fidelity));
    }
    plan.extend(std::iter::repeat_n(problem.highest_fidelity_vector(), config.initial_highest));
    plan
}

/// Normalized cost of the initial design.
pub fn initialization_cost(problem: &BenchmarkProblem, config: &CampaignConfig) -> f64 {
    design_plan(problem, config).iter().map(|f| f.normalized_cost()).sum()
}

/// Evaluates the initial design at consecutive points of a seeded Sobol sequence.
pub fn initialize_design(problem: &BenchmarkProblem, config: &CampaignConfig) -> Result<Vec<EvaluationRecord>> {
    config.validate()?;
    let plan = design_plan(problem, config);
    let cost: f64 = plan.iter().map(|f| f.normalized_cost()).sum();
    if cost > config.total_budget + 1e-9 {
        return Err(Error::Config(format!(
            "budget {} is below the initial design cost {cost}",
            config.total_budget
        )));
    }
    let sobol = Sobol::scrambled(problem.dim(), derive_seed(config.seed, STREAM_DESIGN, 0))?;
    let mut records = Vec::with_capacity(plan.len());
    let mut total = 0.0;
    for (i, fv) in plan.into_iter().enumerate() {
        let x = sobol.point(i as u32);
        let outputs = problem.evaluate(&x, &fv)?;
        total += fv.normalized_cost();
        records.push(EvaluationRecord {
            iteration: 0,
            input: x,
            fidelity_vector: fv,
            outputs,
            cumulative_cost: total,
            acquisition: None,
        });
    }
    Ok(records)
}

/// One multi-fidelity GP per objective, conditioned on `records`.
pub fn build_models(problem: &BenchmarkProblem, records: &[EvaluationRecord]) -> Result<Vec<MultiFidelityGp>> {
    let costs = problem.costs();
    problem
        .fidelity_counts()
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let mut gp = MultiFidelityGp::new(problem.dim(), m, KernelParams::default_for(problem.dim()))?
                .with_output_normalization(true)?;
            gp.extend(records.iter().map(|r| observation(r, j, &costs)))?;
            Ok(gp)
        })
        .collect()
}

fn observation(r: &EvaluationRecord, j: usize, costs: &[Vec<f64>]) -> FidelityObservation {
    let m = r.fidelity_vector.indices()[j];
    FidelityObservation {
        input: r.input.clone(),
        fidelity: m,
        value: r.outputs[j],
        raw_cost: costs[j][m - 1],
    }
}

fn refit_models(models: &mut [MultiFidelityGp], config: &CampaignConfig, restarts: usize, round: u64) -> Result<()> {
    for (j, gp) in models.iter_mut().enumerate() {
        if gp.len() < 3 {
            continue;
        }
        let seed = derive_seed(config.seed, STREAM_FIT, round * 64 + j as u64);
        match gp.refit_capped(restarts, config.fit_max_evals, seed) {
            Ok(_) => {}
            Err(Error::Numerical(msg)) => log::warn!("objective {j}: refit failed, keeping parameters ({msg})"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Draws `S` joint samples of the highest-fidelity objectives and solves each
/// sampled problem with NSGA-II.
pub fn sample_fronts(
    models: &[MultiFidelityGp],
    domain: &BoxDomain,
    config: &CampaignConfig,
    seed: u64,
) -> Result<Vec<ParetoFrontSample>> {
    let nsga = config.nsga();
    (0..config.mc_samples)
        .into_par_iter()
        .map(|s| {
            let functions = models
                .iter()
                .enumerate()
                .map(|(j, gp)| {
                    sample_highest_fidelity(
                        gp,
                        config.n_features,
                        LowFidelityConditioning::Blocked,
                        derive_seed(seed, s as u64, j as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let objective = |x: &[f64]| functions.iter().map(|f| f.evaluate_unchecked(x)).collect::<Vec<f64>>();
            nsga2_minimize(objective, domain, &nsga, derive_seed(seed, s as u64, u64::MAX))
        })
        .collect()
}

/// Acquisition values over one iteration's candidate grid.
#[derive(Debug, Clone)]
pub struct AcquisitionGrid {
    pub candidates: Vec<Vec<f64>>,
    /// `values[i][k]`: candidate `i` at fidelity vector `k`.
    pub values: Vec<Vec<f64>>,
    pub fronts: Vec<ParetoFrontSample>,
}

/// Samples `S` fronts and scores a fresh Sobol candidate grid against every
/// fidelity vector.
pub fn acquisition_grid(
    models: &[MultiFidelityGp],
    fidelity_vectors: &[FidelityVector],
    config: &CampaignConfig,
    seed: u64,
) -> Result<AcquisitionGrid> {
    if models.is_empty() || fidelity_vectors.is_empty() {
        return Err(Error::InvalidState("nothing to select from".into()));
    }
    let dim = models[0].dim();
    let domain = BoxDomain::unit(dim);
    let fronts = sample_fronts(models, &domain, config, derive_seed(seed, STREAM_FRONT, 0))?;
    let settings =
        AcquisitionSettings::new(config.approximation, config.quadrature_nodes)?.with_bound(config.front_bound);
    let candidates = Sobol::scrambled(dim, derive_seed(seed, STREAM_GRID, 0))?.points(config.candidate_grid_size);
    let values = candidates
        .par_iter()
        .map(|x| -> Result<Vec<f64>> {
            let preds = predict_objectives(models, x)?;
            let table = GainTable::compute(&preds, &fronts, &settings)?;
            Ok(fidelity_vectors.iter().map(|fv| table.acquisition(fv)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(AcquisitionGrid {
        candidates,
        values,
        fronts,
    })
}

/// Maximizes the acquisition over a fresh candidate grid and the given
/// fidelity vectors. Ties go to the lowest grid index, then to the earliest
/// fidelity vector.
pub fn select_next(
    models: &[MultiFidelityGp],
    fidelity_vectors: &[FidelityVector],
    config: &CampaignConfig,
    seed: u64,
) -> Result<Selection> {
    let grid = acquisition_grid(models, fidelity_vectors, config, seed)?;
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, row) in grid.values.iter().enumerate() {
        for (k, &a) in row.iter().enumerate() {
            if a.is_finite() && best.is_none_or(|(b, _, _)| a > b) {
                best = Some((a, i, k));
            }
        }
    }
    let (acquisition, i, k) = best.ok_or_else(|| {
        Error::InvalidState(format!(
            "acquisition is non-finite on all {} candidates ({} fidelity vectors, {} front samples)",
            grid.candidates.len(),
            fidelity_vectors.len(),
            grid.fronts.len()
        ))
    })?;
    Ok(Selection {
        input: grid.candidates[i].clone(),
        fidelity_vector: fidelity_vectors[k].clone(),
        acquisition,
    })
}

/// Non-dominated posterior means at the highest fidelity over a uniform random grid.
pub fn recommend_front(models: &[MultiFidelityGp], grid_size: usize, seed: u64) -> Result<ParetoFrontSample> {
    let dim = models
        .first()
        .ok_or_else(|| Error::InvalidState("no models to recommend from".into()))?
        .dim();
    let domain = BoxDomain::unit(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<Vec<f64>> = (0..grid_size).map(|_| domain.sample_uniform(&mut rng)).collect();
    let points: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|x| posterior_means(models, x))
        .collect::<Result<_>>()?;
    ParetoFrontSample::from_points(points, grid)
}

fn posterior_means(models: &[MultiFidelityGp], x: &[f64]) -> Result<Vec<f64>> {
    models.iter().map(|gp| gp.posterior_mean(x, gp.n_fidelities())).collect()
}

/// [`recommend_front`] followed by NSGA-II on the posterior means, started
/// from the grid's front. `generations = 0` returns the grid front.
pub fn recommend_front_refined(
    models: &[MultiFidelityGp],
    grid_size: usize,
    generations: usize,
    seed: u64,
) -> Result<ParetoFrontSample> {
    let grid_front = recommend_front(models, grid_size, seed)?;
    if generations == 0 {
        return Ok(grid_front);
    }
    let domain = BoxDomain::unit(models[0].dim());
    let config = Nsga2Config {
        population_size: 100,
        generations,
        ..Nsga2Config::default()
    };
    // Spread the starting population along the grid front.
    let mut order: Vec<usize> = (0..grid_front.len()).collect();
    order.sort_by(|&a, &b| grid_front.points[a][0].total_cmp(&grid_front.points[b][0]));
    let stride = (order.len() as f64 / config.population_size as f64).max(1.0);
    let seeds: Vec<Vec<f64>> = (0..config.population_size.min(order.len()))
        .map(|i| grid_front.inputs[order[(i as f64 * stride) as usize]].clone())
        .collect();
    let objective = |x: &[f64]| posterior_means(models, x).expect("query inside the unit cube");
    let refined = nsga2_with_seeds(objective, &domain, &config, &seeds, seed ^ 0x7265_6669_6e65)?;
    let mut points = grid_front.points;
    let mut inputs = grid_front.inputs;
    points.extend(refined.points);
    inputs.extend(refined.inputs);
    ParetoFrontSample::from_points(points, inputs)
}

/// PHV difference of the recommended set, scored by the true objectives at
/// its inputs so that model bias cannot make a front look better than it is.
pub fn recommended_phv(
    problem: &BenchmarkProblem,
    models: &[MultiFidelityGp],
    reference: &ReferenceData,
    config: &CampaignConfig,
) -> Result<f64> {
    let front = recommend_front_refined(
        models,
        config.recommend_grid_size,
        config.recommend_generations,
        derive_seed(config.seed, STREAM_RECOMMEND, 0),
    )?;
    let truth = front
        .inputs
        .iter()
        .map(|x| problem.evaluate_highest(x))
        .collect::<Result<Vec<_>>>()?;
    let inside: Vec<Vec<f64>> = truth
        .into_iter()
        .filter(|p| p.iter().zip(&reference.point).all(|(a, r)| a <= r))
        .collect();
    phv_difference_auto(
        &inside,
        &reference.front,
        &reference.point,
        derive_seed(config.front_seed, STREAM_PHV, 0),
    )
}

/// Runs the full budgeted loop on `problem`.
pub fn run_campaign(problem: &BenchmarkProblem, config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let reference = if config.track_phv {
        Some(ReferenceData::for_problem(problem, config.front_effort, config.front_seed)?)
    } else {
        None
    };
    let mut records = initialize_design(problem, config)?;
    let n_initial = records.len();
    let mut models = build_models(problem, &records)?;
    let mut refit_round = 0u64;
    refit_models(&mut models, config, config.initial_fit_restarts, refit_round)?;

    let mut phv_trace = vec![f64::NAN; n_initial];
    if let Some(r) = &reference {
        phv_trace[n_initial - 1] = recommended_phv(problem, &models, r, config)?;
    }

    let costs = problem.costs();
    let all_vectors = problem.fidelity_vectors();
    let mut spent = records.last().map_or(0.0, |r| r.cumulative_cost);
    let mut since_refit = 0;
    let mut iteration = 0usize;
    let mut failures = 0;
    loop {
        let remaining = config.total_budget - spent;
        let affordable: Vec<FidelityVector> = all_vectors
            .iter()
            .filter(|f| f.normalized_cost() <= remaining + 1e-9)
            .cloned()
            .collect();
        if affordable.is_empty() {
            break;
        }
        iteration += 1;
        let step_seed = derive_seed(config.seed, STREAM_STEP, iteration as u64);
        let choice = select_next(&models, &affordable, config, step_seed)?;
        let outputs = match problem.evaluate(&choice.input, &choice.fidelity_vector) {
            Ok(v) => v,
            Err(e) if !config.abort_on_evaluation_error && failures < 10 => {
                log::error!("iteration {iteration}: evaluation failed, skipping ({e})");
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        spent += choice.fidelity_vector.normalized_cost();
        let record = EvaluationRecord {
            iteration,
            input: choice.input,
            fidelity_vector: choice.fidelity_vector,
            outputs,
            cumulative_cost: spent,
            acquisition: Some(choice.acquisition),
        };
        for (j, gp) in models.iter_mut().enumerate() {
            gp.add_observation(observation(&record, j, &costs))?;
        }
        log::debug!(
            "iteration {iteration}: fidelity {} cost {spent:.3} acquisition {:.4}",
            record.fidelity_vector.label(),
            choice.acquisition
        );
        records.push(record);
        since_refit += 1;
        if since_refit >= config.refit_interval {
            refit_round += 1;
            refit_models(&mut models, config, config.fit_restarts, refit_round)?;
            since_refit = 0;
        }
        phv_trace.push(match &reference {
            Some(r) => recommended_phv(problem, &models, r, config)?,
            None => f64::NAN,
        });
    }
    Ok(CampaignResult {
        records,
        phv_trace,
        n_initial,
        reference,
        models,
    })
}
