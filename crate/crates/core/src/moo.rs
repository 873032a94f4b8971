//! Pareto dominance, non-dominated sorting and an NSGA-II solver used to draw
//! Pareto-front samples from cheap sampled objectives.
//!
//! Everything here minimizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// `a` Pareto-dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "objective vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of the points not dominated by any other point.
pub fn non_dominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates_unchecked(q, &points[i]))
        })
        .collect()
}

/// Deb's fast non-dominated sort. Returns fronts of indices, best first;
/// indices inside a front are ascending.
pub fn fast_non_dominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates_unchecked(&objectives[p], &objectives[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates_unchecked(&objectives[q], &objectives[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (parallel to `front`).
/// Boundary points per objective get `+∞`.
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let l = front.len();
    let mut dist = vec![0.0; l];
    if l == 0 {
        return dist;
    }
    if l <= 2 {
        return vec![f64::INFINITY; l];
    }
    let k = objectives[front[0]].len();
    let mut order: Vec<usize> = (0..l).collect();
    for m in 0..k {
        // Stable sort keeps index order among ties.
        order.sort_by(|&a, &b| objectives[front[a]][m].total_cmp(&objectives[front[b]][m]));
        let lo = objectives[front[order[0]]][m];
        let hi = objectives[front[order[l - 1]]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[l - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..l - 1 {
            let prev = objectives[front[order[w - 1]]][m];
            let next = objectives[front[order[w + 1]]][m];
            dist[order[w]] += (next - prev) / span;
        }
    }
    dist
}

/// A member of an NSGA-II population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub input: Vec<f64>,
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

/// Assigns `rank` and `crowding` in place and returns the fronts.
pub fn rank_population(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objs: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    let fronts = fast_non_dominated_sort(&objs);
    for (r, front) in fronts.iter().enumerate() {
        let cd = crowding_distance(&objs, front);
        for (&i, c) in front.iter().zip(cd) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

/// A sampled Pareto front `{z¹..zˡ}` with its per-objective maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFrontSample {
    pub points: Vec<Vec<f64>>,
    /// Preimages of `points`, when known.
    pub inputs: Vec<Vec<f64>>,
    pub per_dim_max: Vec<f64>,
    pub per_dim_min: Vec<f64>,
}

impl ParetoFrontSample {
    /// Keeps the non-dominated subset of `points` (first copy of duplicates).
    pub fn from_points(points: Vec<Vec<f64>>, inputs: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("a Pareto front needs at least one point"));
        }
        let k = points[0].len();
        if points.iter().any(|p| p.len() != k) {
            return Err(Error::arg("front points differ in length"));
        }
        let have_inputs = inputs.len() == points.len();
        let keep = non_dominated_indices(&points);
        let mut kept_points: Vec<Vec<f64>> = Vec::with_capacity(keep.len());
        let mut kept_inputs = Vec::new();
        for i in keep {
            if kept_points.contains(&points[i]) {
                continue;
            }
            kept_points.push(points[i].clone());
            if have_inputs {
                kept_inputs.push(inputs[i].clone());
            }
        }
        let per_dim_max = (0..k)
            .map(|j| kept_points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let per_dim_min = (0..k)
            .map(|j| kept_points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
            .collect();
        Ok(ParetoFrontSample {
            points: kept_points,
            inputs: kept_inputs,
            per_dim_max,
            per_dim_min,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// NSGA-II settings.
#[derive(Debug, Clone)]
pub struct Nsga2Config {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    /// Per-variable mutation probability; `None` means `1 / d`.
    pub mutation_prob: Option<f64>,
    /// Evaluate offspring on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            population_size: 100,
            generations: 100,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            mutation_prob: None,
            parallel: false,
        }
    }
}

/// Minimizes a vector-valued `objective` over `domain` and returns the
/// non-dominated members of the final population.
pub fn nsga2_minimize<F>(
    objective: F,
    domain: &BoxDomain,
    config: &Nsga2Config,
    seed: u64,
) -> Result<ParetoFrontSample>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    nsga2_with_seeds(objective, domain, config, &[], seed)
}

/// As [`nsga2_minimize`], with `seeds` injected into the initial population.
pub fn nsga2_with_seeds<F>(
    objective: F,
    domain: &BoxDomain,
    config: &Nsga2Config,
    seeds: &[Vec<f64>],
    seed: u64,
) -> Result<ParetoFrontSample>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let pop = nsga2_population(&objective, domain, config, seeds, seed)?;
    let (points, inputs): (Vec<_>, Vec<_>) = pop
        .into_iter()
        .filter(|i| i.rank == 0)
        .map(|i| (i.objectives, i.input))
        .unzip();
    ParetoFrontSample::from_points(points, inputs)
}

/// Runs NSGA-II and returns the final ranked population.
pub fn nsga2_population<F>(
    objective: &F,
    domain: &BoxDomain,
    config: &Nsga2Config,
    seeds: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<Individual>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if config.population_size < 2 {
        return Err(Error::arg("population size must be at least 2"));
    }
    let d = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / d as f64);
    let n = config.population_size;

    let mut inputs: Vec<Vec<f64>> = seeds
        .iter()
        .filter(|s| domain.contains(s))
        .take(n)
        .cloned()
        .collect();
    while inputs.len() < n {
        inputs.push(domain.sample_uniform(&mut rng));
    }
    let mut pop = evaluate_all(objective, inputs, config.parallel)?;
    rank_population(&mut pop);

    for _ in 0..config.generations {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_prob {
                sbx(&pop[a].input, &pop[b].input, domain, config.crossover_eta, &mut rng)
            } else {
                (pop[a].input.clone(), pop[b].input.clone())
            };
            polynomial_mutation(&mut c1, domain, config.mutation_eta, mutation_prob, &mut rng);
            polynomial_mutation(&mut c2, domain, config.mutation_eta, mutation_prob, &mut rng);
            children.push(c1);
            if children.len() < n {
                children.push(c2);
            }
        }
        let offspring = evaluate_all(objective, children, config.parallel)?;
        pop.extend(offspring);
        pop = environmental_selection(pop, n);
    }
    Ok(pop)
}

fn evaluate_all<F>(objective: &F, inputs: Vec<Vec<f64>>, parallel: bool) -> Result<Vec<Individual>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let eval = |x: Vec<f64>| {
        let objectives = objective(&x);
        Individual {
            input: x,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    };
    let pop: Vec<Individual> = if parallel {
        inputs.into_par_iter().map(eval).collect()
    } else {
        inputs.into_iter().map(eval).collect()
    };
    let k = pop.first().map(|i| i.objectives.len()).unwrap_or(0);
    if k == 0 || pop.iter().any(|i| i.objectives.len() != k) {
        return Err(Error::arg("objective returned an empty or ragged vector"));
    }
    if pop.iter().any(|i| i.objectives.iter().any(|v| v.is_nan())) {
        return Err(Error::Numerical("objective returned NaN".into()));
    }
    Ok(pop)
}

fn crowded_better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn tournament<R: Rng>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if crowded_better(&pop[b], &pop[a]) {
        b
    } else {
        a
    }
}

fn environmental_selection(mut pop: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = rank_population(&mut pop);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
        } else {
            let mut last = front;
            last.sort_by(|&a, &b| pop[b].crowding.total_cmp(&pop[a].crowding));
            chosen.extend(last.into_iter().take(n - chosen.len()));
        }
        if chosen.len() == n {
            break;
        }
    }
    chosen.sort_unstable();
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    let mut next: Vec<Individual> = chosen.into_iter().map(|i| slots[i].take().unwrap()).collect();
    // Crowding is recomputed for the survivors so tournaments see the
    // density of the population they actually draw from.
    rank_population(&mut next);
    next
}

/// Bounded simulated binary crossover.
fn sbx<R: Rng>(
    p1: &[f64],
    p2: &[f64],
    domain: &BoxDomain,
    eta: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for i in 0..p1.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        if (y2 - y1).abs() < 1e-14 {
            continue;
        }
        let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let a = (0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1))).clamp(lo, hi);
        let b = (0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1))).clamp(lo, hi);
        if rng.random::<f64>() < 0.5 {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation.
fn polynomial_mutation<R: Rng>(x: &mut [f64], domain: &BoxDomain, eta: f64, prob: f64, rng: &mut R) {
    for (i, v) in x.iter_mut().enumerate() {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
        let width = hi - lo;
        let d1 = (*v - lo) / width;
        let d2 = (hi - *v) / width;
        let u: f64 = rng.random();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (*v + dq * width).clamp(lo, hi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identical_points_share_one_front() {
        let pts = vec![vec![1.0, 2.0]; 5];
        assert_eq!(fast_non_dominated_sort(&pts), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn chain_gives_singleton_fronts() {
        let pts = vec![vec![3.0, 3.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(fast_non_dominated_sort(&pts), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn crowding_marks_extremes_infinite() {
        let pts = vec![vec![0.0, 4.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![4.0, 0.0]];
        let cd = crowding_distance(&pts, &[0, 1, 2, 3]);
        assert!(cd[0].is_infinite() && cd[3].is_infinite());
        assert!((cd[1] - (2.0 / 4.0 + 3.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn front_sample_tracks_maxima() {
        let f = ParetoFrontSample::from_points(
            vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0], vec![3.0, 3.0], vec![2.0, 2.0]],
            vec![],
        )
        .unwrap();
        assert_eq!(f.points.len(), 3);
        assert_eq!(f.per_dim_max, vec![3.0, 3.0]);
        assert!(ParetoFrontSample::from_points(vec![], vec![]).is_err());
    }

    #[test]
    fn duplicated_objective_collapses_to_minimizer() {
        let dom = BoxDomain::new(vec![-2.0], vec![2.0]).unwrap();
        let f = |x: &[f64]| {
            let v = (x[0] - 0.7).powi(2);
            vec![v, v]
        };
        let front = nsga2_minimize(f, &dom, &Nsga2Config::default(), 3).unwrap();
        for (p, x) in front.points.iter().zip(&front.inputs) {
            assert!(p[0] < 1e-4, "{p:?}");
            assert!((x[0] - 0.7).abs() < 1e-2);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let dom = BoxDomain::unit(2);
        let f = |x: &[f64]| vec![x[0], 1.0 - x[0].sqrt() + x[1]];
        let cfg = Nsga2Config { population_size: 20, generations: 10, ..Default::default() };
        let a = nsga2_minimize(f, &dom, &cfg, 42).unwrap();
        let b = nsga2_minimize(f, &dom, &Nsga2Config { parallel: true, ..cfg.clone() }, 42).unwrap();
        assert_eq!(a, b);
    }
}
