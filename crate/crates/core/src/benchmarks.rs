//! Synthetic multi-fidelity multi-objective test problems.
//!
//! Every problem takes inputs in the unit hypercube and maps them onto the
//! raw domain of each underlying function:
//!
//! | problem | objectives                   | raw domain                              |
//! |---------|------------------------------|-----------------------------------------|
//! | BC      | Branin, Currin               | [-5,10]×[0,15] and [0,1]²               |
//! | SPP     | Shekel, Park 1, Park 2       | [0,10]⁴, [0,1]⁴, [0,1]⁴                 |
//! | ZDT3    | ZDT3 f1, f2                  | [0,1]⁶                                  |
//! | DTLZ1   | DTLZ1 f1..f6                 | [0,1]⁵                                  |
//!
//! Lower fidelities:
//!
//! * Branin: the multi-fidelity Branin family with `b, c, t` perturbed by
//!   `(0.01, 0.1, 0.05)·(1 − z)` at `z = 0.5`, shifted down by
//!   [`BRANIN_LOW_SHIFT`].
//! * Currin: the standard four-point local average, shifted down by
//!   [`CURRIN_LOW_SHIFT`].
//! * Shekel: fewer terms (5 and 7 of the 10).
//! * Park 1: `(1 + sin(x₁)/10)·f − 2x₁ + x₂² + x₃² + 0.5`.
//! * Park 2: `1.2·f − 1`.
//! * ZDT3 and DTLZ1: `f − (M − m)·δ·b(x)` with the smooth bias
//!   `b(x) = 1 + ½ sin(2π(x₁ + 0.7x₂) + j)` bounded in `[½, 3/2]`, so every
//!   lower fidelity lies below the next one. `δ` is 0.05 for ZDT3 f1,
//!   0.3 for ZDT3 f2 and 0.02 for DTLZ1.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::FidelityVector;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::moo::{non_dominated_indices, nsga2_population, Nsga2Config};

/// Downward shift applied to the low-fidelity Branin.
pub const BRANIN_LOW_SHIFT: f64 = 0.5;
/// Downward shift applied to the low-fidelity Currin.
pub const CURRIN_LOW_SHIFT: f64 = 0.05;
/// Relative margin used to place the reference point beyond the true front.
pub const REFERENCE_MARGIN: f64 = 0.1;
/// Convergence threshold as a fraction of the reference-front hypervolume.
pub const CONVERGENCE_FRACTION: f64 = 0.02;
/// Default number of true-function evaluations spent on a reference front.
pub const DEFAULT_FRONT_EFFORT: usize = 20_000;

type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Bc,
    Spp,
    Zdt3,
    Dtlz1,
}

impl ProblemName {
    pub const ALL: [ProblemName; 4] = [ProblemName::Bc, ProblemName::Spp, ProblemName::Zdt3, ProblemName::Dtlz1];
}

impl std::str::FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BC" => Ok(ProblemName::Bc),
            "SPP" => Ok(ProblemName::Spp),
            "ZDT3" => Ok(ProblemName::Zdt3),
            "DTLZ1" => Ok(ProblemName::Dtlz1),
            _ => Err(Error::arg(format!(
                "unknown problem '{s}' (expected BC, SPP, ZDT3 or DTLZ1)"
            ))),
        }
    }
}

impl std::fmt::Display for ProblemName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemName::Bc => "BC",
            ProblemName::Spp => "SPP",
            ProblemName::Zdt3 => "ZDT3",
            ProblemName::Dtlz1 => "DTLZ1",
        })
    }
}

/// One objective's implementations, lowest fidelity first.
#[derive(Clone)]
pub struct ObjectiveFamily {
    pub label: String,
    fidelities: Vec<ObjectiveFn>,
    costs: Vec<f64>,
}

impl ObjectiveFamily {
    fn new(label: &str, fidelities: Vec<ObjectiveFn>, costs: &[f64]) -> Self {
        assert_eq!(fidelities.len(), costs.len());
        ObjectiveFamily {
            label: label.to_string(),
            fidelities,
            costs: costs.to_vec(),
        }
    }

    pub fn n_fidelities(&self) -> usize {
        self.fidelities.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

impl std::fmt::Debug for ObjectiveFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectiveFamily")
            .field("label", &self.label)
            .field("costs", &self.costs)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    name: ProblemName,
    dim: usize,
    objectives: Vec<ObjectiveFamily>,
    single_fidelity: bool,
}

/// Builds a registered problem.
pub fn make_problem(name: ProblemName) -> BenchmarkProblem {
    let objectives = match name {
        ProblemName::Bc => vec![
            ObjectiveFamily::new(
                "Branin",
                vec![Arc::new(|x| branin_family(x, 0.5) - BRANIN_LOW_SHIFT), Arc::new(branin)],
                &[1.0, 10.0],
            ),
            ObjectiveFamily::new(
                "Currin",
                vec![Arc::new(|x| currin_low(x) - CURRIN_LOW_SHIFT), Arc::new(currin)],
                &[1.0, 10.0],
            ),
        ],
        ProblemName::Spp => vec![
            ObjectiveFamily::new(
                "Shekel",
                vec![
                    Arc::new(|x| shekel(x, 5)),
                    Arc::new(|x| shekel(x, 7)),
                    Arc::new(|x| shekel(x, 10)),
                ],
                &[0.1, 1.0, 10.0],
            ),
            ObjectiveFamily::new("Park 1", vec![Arc::new(park1_low), Arc::new(park1)], &[1.0, 10.0]),
            ObjectiveFamily::new("Park 2", vec![Arc::new(|x| 1.2 * park2(x) - 1.0), Arc::new(park2)], &[1.0, 10.0]),
        ],
        ProblemName::Zdt3 => {
            let deltas = [0.05, 0.3];
            (0..2)
                .map(|j| biased_family(&format!("ZDT3 f{}", j + 1), 2, deltas[j], j, &[1.0, 10.0], move |x| zdt3(x)[j]))
                .collect()
        }
        ProblemName::Dtlz1 => (0..6)
            .map(|j| biased_family(&format!("DTLZ1 f{}", j + 1), 3, 0.02, j, &[0.1, 1.0, 10.0], move |x| dtlz1(x, 6)[j]))
            .collect(),
    };
    let dim = match name {
        ProblemName::Bc => 2,
        ProblemName::Spp => 4,
        ProblemName::Zdt3 => 6,
        ProblemName::Dtlz1 => 5,
    };
    BenchmarkProblem {
        name,
        dim,
        objectives,
        single_fidelity: false,
    }
}

/// Looks a problem up by name.
pub fn problem_by_name(name: &str) -> Result<BenchmarkProblem> {
    Ok(make_problem(name.parse()?))
}

fn biased_family<F>(label: &str, n_fid: usize, delta: f64, j: usize, costs: &[f64], f: F) -> ObjectiveFamily
where
    F: Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
{
    let fidelities = (1..=n_fid)
        .map(|m| {
            let f = f.clone();
            let steps = (n_fid - m) as f64;
            Arc::new(move |x: &[f64]| f(x) - steps * delta * smooth_bias(x, j)) as ObjectiveFn
        })
        .collect();
    ObjectiveFamily::new(label, fidelities, costs)
}

fn smooth_bias(x: &[f64], j: usize) -> f64 {
    let x2 = x.get(1).copied().unwrap_or(0.0);
    1.0 + 0.5 * (2.0 * PI * (x[0] + 0.7 * x2) + j as f64).sin()
}

impl BenchmarkProblem {
    pub fn name(&self) -> ProblemName {
        self.name
    }

    pub fn is_single_fidelity(&self) -> bool {
        self.single_fidelity
    }

    pub fn n_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The unit hypercube all inputs live in.
    pub fn domain(&self) -> BoxDomain {
        BoxDomain::unit(self.dim)
    }

    pub fn objectives(&self) -> &[ObjectiveFamily] {
        &self.objectives
    }

    pub fn fidelity_counts(&self) -> Vec<usize> {
        self.objectives.iter().map(|o| o.n_fidelities()).collect()
    }

    /// `costs()[j][m − 1]`.
    pub fn costs(&self) -> Vec<Vec<f64>> {
        self.objectives.iter().map(|o| o.costs.clone()).collect()
    }

    pub fn fidelity_vectors(&self) -> Vec<FidelityVector> {
        FidelityVector::enumerate(&self.costs())
    }

    pub fn highest_fidelity_vector(&self) -> FidelityVector {
        FidelityVector::highest(&self.costs())
    }

    /// The same problem with only the highest fidelity of every objective.
    pub fn single_fidelity(&self) -> BenchmarkProblem {
        let objectives = self
            .objectives
            .iter()
            .map(|o| ObjectiveFamily {
                label: o.label.clone(),
                fidelities: vec![o.fidelities.last().expect("non-empty").clone()],
                costs: vec![*o.costs.last().expect("non-empty")],
            })
            .collect();
        BenchmarkProblem {
            name: self.name,
            dim: self.dim,
            objectives,
            single_fidelity: true,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::arg(format!("{}: expected {} inputs, got {}", self.name, self.dim, x.len())));
        }
        if !self.domain().contains(x) {
            return Err(Error::arg(format!("{}: input {x:?} outside the unit hypercube", self.name)));
        }
        Ok(())
    }

    /// Objective `j` (0-based) at fidelity `m` (1-based).
    pub fn evaluate_objective(&self, j: usize, x: &[f64], m: usize) -> Result<f64> {
        self.check_input(x)?;
        let family = self
            .objectives
            .get(j)
            .ok_or_else(|| Error::arg(format!("objective {j} out of range")))?;
        if m == 0 || m > family.n_fidelities() {
            return Err(Error::arg(format!("fidelity {m} out of range for {}", family.label)));
        }
        Ok((family.fidelities[m - 1])(x))
    }

    pub fn evaluate(&self, x: &[f64], fv: &FidelityVector) -> Result<Vec<f64>> {
        if fv.indices().len() != self.objectives.len() {
            return Err(Error::arg("fidelity vector length differs from objective count"));
        }
        fv.indices()
            .iter()
            .enumerate()
            .map(|(j, &m)| self.evaluate_objective(j, x, m))
            .collect()
    }

    /// Ground-truth objective vector.
    pub fn evaluate_highest(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.truth_unchecked(x))
    }

    fn truth_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.objectives
            .iter()
            .map(|o| (o.fidelities.last().expect("non-empty"))(x))
            .collect()
    }

    /// Non-dominated set of the true objectives from random search plus
    /// NSGA-II, spending roughly `effort` evaluations on each. Cached per
    /// `(problem, effort, seed)`.
    pub fn reference_front(&self, effort: usize, seed: u64) -> Result<Arc<Vec<Vec<f64>>>> {
        if effort < 10_000 {
            return Err(Error::arg(format!("reference front effort must be at least 10000, got {effort}")));
        }
        static CACHE: OnceLock<Mutex<HashMap<(ProblemName, usize, u64), Arc<Vec<Vec<f64>>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (self.name, effort, seed);
        if let Some(front) = cache.lock().expect("cache lock").get(&key) {
            return Ok(front.clone());
        }
        let front = Arc::new(self.compute_reference_front(effort, seed)?);
        cache.lock().expect("cache lock").insert(key, front.clone());
        Ok(front)
    }

    fn compute_reference_front(&self, effort: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let domain = self.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<Vec<f64>> = Vec::new();

        // Random search, reduced chunk by chunk to keep the sort cheap.
        let chunk = 2_000;
        let mut drawn = 0;
        while drawn < effort {
            let n = chunk.min(effort - drawn);
            for _ in 0..n {
                candidates.push(self.truth_unchecked(&domain.sample_uniform(&mut rng)));
            }
            drawn += n;
            candidates = keep_non_dominated(candidates);
        }

        let population = 200;
        let config = Nsga2Config {
            population_size: population,
            generations: (effort / population).max(50),
            parallel: true,
            ..Nsga2Config::default()
        };
        let truth = |x: &[f64]| self.truth_unchecked(x);
        let pop = nsga2_population(&truth, &domain, &config, &[], seed ^ 0x5eed)?;
        candidates.extend(pop.into_iter().filter(|i| i.rank == 0).map(|i| i.objectives));
        let mut front = keep_non_dominated(candidates);
        front.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        front.dedup();
        Ok(front)
    }

    /// Reference point: the front's componentwise maximum plus a 10% range margin.
    pub fn reference_point(&self, effort: usize, seed: u64) -> Result<Vec<f64>> {
        crate::metrics::reference_point_for(&self.reference_front(effort, seed)?, REFERENCE_MARGIN)
    }
}

fn keep_non_dominated(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let keep = non_dominated_indices(&points);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(keep.len());
    let mut taken = vec![false; points.len()];
    for i in keep {
        taken[i] = true;
    }
    for (i, p) in points.into_iter().enumerate() {
        if taken[i] {
            out.push(p);
        }
    }
    out
}

/// Branin on `[-5,10]×[0,15]`, with unit-cube input.
pub fn branin(u: &[f64]) -> f64 {
    branin_family(u, 1.0)
}

/// The multi-fidelity Branin family; `z = 1` is the standard function.
pub fn branin_family(u: &[f64], z: f64) -> f64 {
    let x1 = -5.0 + 15.0 * u[0];
    let x2 = 15.0 * u[1];
    let b = 5.1 / (4.0 * PI * PI) - 0.01 * (1.0 - z);
    let c = 5.0 / PI - 0.1 * (1.0 - z);
    let t = 1.0 / (8.0 * PI) + 0.05 * (1.0 - z);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Currin exponential function on `[0,1]²`.
pub fn currin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let factor = if x2 > 0.0 { 1.0 - (-0.5 / x2).exp() } else { 1.0 };
    factor * (2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0)
        / (100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0)
}

/// Four-point local average of Currin.
pub fn currin_low(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let down = (x2 - 0.05).max(0.0);
    0.25 * (currin(&[x1 + 0.05, x2 + 0.05]) + currin(&[x1 + 0.05, down]))
        + 0.25 * (currin(&[x1 - 0.05, x2 + 0.05]) + currin(&[x1 - 0.05, down]))
}

const SHEKEL_BETA: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];
const SHEKEL_C: [[f64; 10]; 4] = [
    [4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0],
    [4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6],
    [4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0],
    [4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6],
];

/// Shekel with the first `terms` of its ten wells, on `[0,10]⁴`.
pub fn shekel(u: &[f64], terms: usize) -> f64 {
    -(0..terms)
        .map(|i| {
            let d: f64 = (0..4).map(|j| (10.0 * u[j] - SHEKEL_C[j][i]).powi(2)).sum();
            1.0 / (d + SHEKEL_BETA[i])
        })
        .sum::<f64>()
}

/// Park 1 on `[0,1]⁴`, written so that `x₁ = 0` is well defined.
pub fn park1(x: &[f64]) -> f64 {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    0.5 * ((x1 * x1 + (x2 + x3 * x3) * x4).sqrt() - x1) + (x1 + 3.0 * x4) * (1.0 + x3.sin()).exp()
}

pub fn park1_low(x: &[f64]) -> f64 {
    (1.0 + x[0].sin() / 10.0) * park1(x) - 2.0 * x[0] + x[1] * x[1] + x[2] * x[2] + 0.5
}

/// Park 2 on `[0,1]⁴`.
pub fn park2(x: &[f64]) -> f64 {
    2.0 / 3.0 * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
}

/// ZDT3 objectives for any input length ≥ 2.
pub fn zdt3(x: &[f64]) -> [f64; 2] {
    let n = x.len();
    let f1 = x[0];
    let g = 1.0 + 9.0 / (n - 1) as f64 * x[1..].iter().sum::<f64>();
    let r = f1 / g;
    let h = 1.0 - r.sqrt() - r * (10.0 * PI * f1).sin();
    [f1, g * h]
}

/// DTLZ1 with `k` objectives. The last `x.len() − k + 1` inputs are distance
/// variables (none when the input length is `k − 1`).
pub fn dtlz1(x: &[f64], k: usize) -> Vec<f64> {
    let pos = k - 1;
    let g = if x.len() > pos {
        let tail = &x[pos..];
        100.0
            * (tail.len() as f64
                + tail
                    .iter()
                    .map(|v| (v - 0.5).powi(2) - (20.0 * PI * (v - 0.5)).cos())
                    .sum::<f64>())
    } else {
        0.0
    };
    (0..k)
        .map(|i| {
            let mut f = 0.5 * (1.0 + g);
            for v in &x[..pos - i] {
                f *= v;
            }
            if i > 0 {
                f *= 1.0 - x[pos - i];
            }
            f
        })
        .collect()
}

/// Disjoint `f1` intervals of the ZDT3 Pareto front.
pub const ZDT3_FRONT_SEGMENTS: [(f64, f64); 5] = [
    (0.0, 0.083_001_534_9),
    (0.182_228_728_0, 0.257_762_363_4),
    (0.409_313_674_8, 0.453_882_104_1),
    (0.618_396_794_4, 0.652_511_703_8),
    (0.823_331_798_3, 0.851_832_865_4),
];

/// Analytic ZDT3 front sampled at `per_segment` points in each segment.
pub fn zdt3_analytic_front(per_segment: usize) -> Vec<Vec<f64>> {
    ZDT3_FRONT_SEGMENTS
        .iter()
        .flat_map(|&(lo, hi)| {
            (0..per_segment).map(move |i| {
                let f1 = lo + (hi - lo) * i as f64 / (per_segment - 1).max(1) as f64;
                vec![f1, 1.0 - f1.sqrt() - f1 * (10.0 * PI * f1).sin()]
            })
        })
        .collect()
}
