//! Experiment runner: manifests, per-seed traces, aggregates and the
//! cost-reduction summary.
//!
//! A run directory holds `trace_seed<N>.csv` for every seed, `aggregate.csv`
//! and `run_info.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::benchmarks::{make_problem, ProblemName};
use crate::error::{Error, Result};
use crate::optimizer::{run_campaign, CampaignConfig, CampaignResult};

pub const OUT_ENV: &str = "MFOSEMO_OUT";
pub const DEFAULT_OUT: &str = "mfosemo-out";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const RUN_INFO_FILE: &str = "run_info.json";
/// PHV differences are floored here before taking log10.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Mf,
    Sf,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Mode::Mf),
            "sf" => Ok(Mode::Sf),
            _ => Err(Error::arg(format!("unknown mode '{s}' (expected mf or sf)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mf => "mf",
            Mode::Sf => "sf",
        })
    }
}

/// Campaign settings plus problem, seeds, mode and output directory. The
/// JSON form is flat: campaign fields sit next to `problem`, `mode`, `seeds`
/// and `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub problem: ProblemName,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub config: CampaignConfig,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            problem: ProblemName::Bc,
            mode: Mode::Mf,
            seeds: vec![0],
            out: None,
            config: CampaignConfig::default(),
        }
    }
}

const MANIFEST_KEYS: [&str; 4] = ["problem", "mode", "seeds", "out"];

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::Config("manifest must be a JSON object".into()));
        };
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn from_map(mut map: Map<String, Value>) -> Result<Self> {
        let mut m = RunManifest::default();
        if let Some(v) = map.remove("problem") {
            m.problem = v
                .as_str()
                .ok_or_else(|| Error::Config("problem must be a string".into()))?
                .parse()?;
        }
        if let Some(v) = map.remove("mode") {
            m.mode = serde_json::from_value(v).map_err(|e| Error::Config(format!("mode: {e}")))?;
        }
        if let Some(v) = map.remove("seeds") {
            m.seeds = serde_json::from_value(v).map_err(|e| Error::Config(format!("seeds: {e}")))?;
        }
        if let Some(v) = map.remove("out") {
            m.out = serde_json::from_value(v).map_err(|e| Error::Config(format!("out: {e}")))?;
        }
        m.config = serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        Ok(m)
    }

    fn to_map(&self) -> Map<String, Value> {
        let Value::Object(mut map) = serde_json::to_value(&self.config).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        map.insert("problem".into(), Value::String(self.problem.to_string()));
        map.insert("mode".into(), Value::String(self.mode.to_string()));
        map.insert("seeds".into(), serde_json::to_value(&self.seeds).expect("seeds serialize"));
        if let Some(out) = &self.out {
            map.insert("out".into(), Value::String(out.display().to_string()));
        }
        map
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&Value::Object(self.to_map())).expect("manifest serializes")
    }

    /// Overrides one field by name. Dashes in `key` are read as underscores;
    /// `value` is parsed as JSON and falls back to a plain string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let mut map = self.to_map();
        if !MANIFEST_KEYS.contains(&key.as_str()) && !map.contains_key(&key) {
            return Err(Error::arg(format!("unknown manifest field '{key}'")));
        }
        map.insert(key, value);
        *self = Self::from_map(map)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.config.validate()
    }

    /// Output directory: the manifest's `out`, then `MFOSEMO_OUT`, then
    /// `mfosemo-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 0 for the initial design.
    pub iteration: usize,
    pub cumulative_cost: f64,
    pub fidelity_vector: Vec<usize>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    /// Empty in the CSV when it was not measured.
    pub phv_diff: Option<f64>,
}

/// One seed's evaluation history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dim: usize,
    pub n_objectives: usize,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn from_result(result: &CampaignResult) -> Result<Self> {
        let first = result
            .records
            .first()
            .ok_or_else(|| Error::InvalidState("campaign produced no records".into()))?;
        let rows = result
            .records
            .iter()
            .zip(&result.phv_trace)
            .map(|(r, &p)| TraceRow {
                iteration: r.iteration,
                cumulative_cost: r.cumulative_cost,
                fidelity_vector: r.fidelity_vector.indices().to_vec(),
                input: r.input.clone(),
                output: r.outputs.clone(),
                phv_diff: (!p.is_nan()).then_some(p),
            })
            .collect();
        Ok(Trace {
            dim: first.input.len(),
            n_objectives: first.outputs.len(),
            rows,
        })
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["iteration".into(), "cumulative_cost".into(), "fidelity_vector".into()];
        h.extend((1..=self.dim).map(|i| format!("x{i}")));
        h.extend((1..=self.n_objectives).map(|j| format!("y{j}")));
        h.push("phv_diff".into());
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidState(format!("csv: {e}"));
        w.write_record(self.header()).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.iteration.to_string(),
                r.cumulative_cost.to_string(),
                r.fidelity_vector.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("-"),
            ];
            rec.extend(r.input.iter().map(|v| v.to_string()));
            rec.extend(r.output.iter().map(|v| v.to_string()));
            rec.push(r.phv_diff.map_or(String::new(), |v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidState(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().map_err(|e| Error::Parse(format!("trace header: {e}")))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let dim = cols.iter().filter(|c| c.starts_with('x')).count();
        let n_obj = cols.iter().filter(|c| c.starts_with('y')).count();
        let expected = Trace {
            dim,
            n_objectives: n_obj,
            rows: vec![],
        };
        if cols != expected.header().iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Parse(format!("unexpected trace header: {}", cols.join(","))));
        }
        let num = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: bad number '{s}'")))
        };
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            let f: Vec<&str> = rec.iter().collect();
            let fidelity_vector = f[2]
                .split('-')
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("line {line}: bad fidelity vector '{}'", f[2])))?;
            rows.push(TraceRow {
                iteration: f[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {line}: bad iteration '{}'", f[0])))?,
                cumulative_cost: num(f[1], line)?,
                fidelity_vector,
                input: f[3..3 + dim].iter().map(|s| num(s, line)).collect::<Result<_>>()?,
                output: f[3 + dim..3 + dim + n_obj]
                    .iter()
                    .map(|s| num(s, line))
                    .collect::<Result<_>>()?,
                phv_diff: match f[3 + dim + n_obj] {
                    "" => None,
                    s => Some(num(s, line)?),
                },
            });
        }
        Ok(Trace {
            dim,
            n_objectives: n_obj,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Cumulative cost of the first row at or below `threshold`.
    pub fn convergence_cost(&self, threshold: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.phv_diff.is_some_and(|p| p <= threshold))
            .map(|r| r.cumulative_cost)
    }

    /// Last measured PHV difference at cumulative cost `≤ cost`.
    pub fn phv_at(&self, cost: f64) -> Option<f64> {
        self.rows
            .iter()
            .take_while(|r| r.cumulative_cost <= cost)
            .filter_map(|r| r.phv_diff)
            .last()
    }

    pub fn final_phv(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.phv_diff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub cumulative_cost: f64,
    /// Seeds with a measurement at or before this cost.
    pub n_seeds: usize,
    pub mean_log10_phv_diff: f64,
    /// Sample variance; `None` with fewer than two seeds.
    pub var_log10_phv_diff: Option<f64>,
}

/// Mean and variance of `log10(max(phv, LOG_FLOOR))` across seeds, carrying
/// each seed's last measurement forward, at every cost where some seed
/// has a measurement.
pub fn aggregate(traces: &[Trace]) -> Vec<AggregateRow> {
    let mut costs: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.rows.iter().filter(|r| r.phv_diff.is_some()).map(|r| r.cumulative_cost))
        .collect();
    costs.sort_by(f64::total_cmp);
    costs.dedup();
    costs
        .into_iter()
        .map(|c| {
            let logs: Vec<f64> = traces
                .iter()
                .filter_map(|t| t.phv_at(c))
                .map(|p| p.max(LOG_FLOOR).log10())
                .collect();
            let n = logs.len();
            let mean = logs.iter().sum::<f64>() / n as f64;
            let var = (n >= 2).then(|| logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64);
            AggregateRow {
                cumulative_cost: c,
                n_seeds: n,
                mean_log10_phv_diff: mean,
                var_log10_phv_diff: var,
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("cumulative_cost,n_seeds,mean_log10_phv_diff,var_log10_phv_diff\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.cumulative_cost,
            r.n_seeds,
            r.mean_log10_phv_diff,
            r.var_log10_phv_diff.map_or(String::new(), |v| v.to_string())
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub seed: u64,
    pub trace: Option<String>,
    pub final_cost: Option<f64>,
    pub final_phv_diff: Option<f64>,
    pub convergence_cost: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub problem: String,
    pub mode: Mode,
    pub reference_hypervolume: Option<f64>,
    pub reference_point: Option<Vec<f64>>,
    pub convergence_threshold: Option<f64>,
    pub seeds: Vec<SeedInfo>,
    pub manifest: Value,
}

impl RunInfo {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_INFO_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub info: RunInfo,
    pub traces: Vec<Trace>,
    /// First campaign failure; the other seeds are still written.
    pub failure: Option<Error>,
}

/// Runs one campaign per seed and writes traces, the aggregate and
/// `run_info.json` into the output directory.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome> {
    manifest.validate()?;
    let dir = manifest.output_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let base = make_problem(manifest.problem);
    let highest = base.highest_fidelity_vector().indices().to_vec();
    let problem = match manifest.mode {
        Mode::Mf => base,
        Mode::Sf => base.single_fidelity(),
    };

    let mut traces = Vec::new();
    let mut seeds = Vec::new();
    let mut failure = None;
    let mut reference = None;
    for &seed in &manifest.seeds {
        let config = CampaignConfig {
            seed,
            ..manifest.config.clone()
        };
        let started = std::time::Instant::now();
        match run_campaign(&problem, &config).and_then(|res| Trace::from_result(&res).map(|t| (res, t))) {
            Ok((res, mut trace)) => {
                if manifest.mode == Mode::Sf {
                    // Traces name fidelities of the full problem.
                    for r in &mut trace.rows {
                        r.fidelity_vector.clone_from(&highest);
                    }
                }
                let name = trace_file_name(seed);
                write(&dir.join(&name), &trace.to_csv()?)?;
                let threshold = res.reference.as_ref().map(|r| r.convergence_threshold());
                log::info!(
                    "{} {} seed {seed}: {} evaluations, cost {:.3}, final PHV diff {:?} ({:.1} s)",
                    manifest.problem,
                    manifest.mode,
                    trace.rows.len(),
                    res.final_cost(),
                    res.final_phv(),
                    started.elapsed().as_secs_f64()
                );
                seeds.push(SeedInfo {
                    seed,
                    trace: Some(name),
                    final_cost: Some(res.final_cost()),
                    final_phv_diff: res.final_phv(),
                    convergence_cost: threshold.and_then(|t| res.convergence_cost(t)),
                    error: None,
                });
                if reference.is_none() {
                    reference = res.reference;
                }
                traces.push(trace);
            }
            Err(e) => {
                log::error!("{} {} seed {seed}: campaign aborted: {e}", manifest.problem, manifest.mode);
                seeds.push(SeedInfo {
                    seed,
                    trace: None,
                    final_cost: None,
                    final_phv_diff: None,
                    convergence_cost: None,
                    error: Some(e.to_string()),
                });
                failure.get_or_insert(e);
            }
        }
    }

    write(&dir.join(AGGREGATE_FILE), &aggregate_csv(&aggregate(&traces)))?;
    let info = RunInfo {
        problem: manifest.problem.to_string(),
        mode: manifest.mode,
        reference_hypervolume: reference.as_ref().map(|r| r.hypervolume),
        reference_point: reference.as_ref().map(|r| r.point.clone()),
        convergence_threshold: reference.as_ref().map(|r| r.convergence_threshold()),
        seeds,
        manifest: Value::Object(manifest.to_map()),
    };
    let json = serde_json::to_string_pretty(&info).expect("run info serializes");
    write(&dir.join(RUN_INFO_FILE), &(json + "\n"))?;
    Ok(RunOutcome {
        dir,
        info,
        traces,
        failure,
    })
}

/// `Λ = 1 − λ/λ_B`, in percent.
pub fn cost_reduction(lambda: f64, lambda_b: f64) -> f64 {
    100.0 * (1.0 - lambda / lambda_b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirSummary {
    pub dir: PathBuf,
    pub problem: String,
    pub mode: Mode,
    /// Convergence cost per seed, recomputed from the traces.
    pub convergence: Vec<(u64, Option<f64>)>,
}

impl DirSummary {
    /// Worst seed; `None` if any seed did not converge.
    pub fn worst(&self) -> Option<f64> {
        self.convergence
            .iter()
            .map(|(_, c)| *c)
            .try_fold(f64::NEG_INFINITY, |acc, c| c.map(|c| acc.max(c)))
            .filter(|v| v.is_finite())
    }

    pub fn best(&self) -> Option<f64> {
        self.convergence.iter().filter_map(|(_, c)| *c).min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReductionRow {
    pub problem: String,
    pub mf_dir: PathBuf,
    /// Worst-seed convergence cost of the multi-fidelity run.
    pub lambda: Option<f64>,
    /// Best-seed convergence cost over the single-fidelity runs.
    pub lambda_b: Option<f64>,
    /// `Λ` in percent; `None` when either side did not converge.
    pub reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub dirs: Vec<DirSummary>,
    pub rows: Vec<CostReductionRow>,
}

pub fn summarize_dir(dir: &Path) -> Result<DirSummary> {
    let info = RunInfo::read(dir)?;
    let threshold = info.convergence_threshold.ok_or_else(|| {
        Error::arg(format!("{}: run has no reference front (PHV tracking was off)", dir.display()))
    })?;
    let mut convergence = Vec::new();
    for s in &info.seeds {
        if let Some(name) = &s.trace {
            let trace = Trace::read(&dir.join(name))?;
            convergence.push((s.seed, trace.convergence_cost(threshold)));
        }
    }
    Ok(DirSummary {
        dir: dir.to_path_buf(),
        problem: info.problem,
        mode: info.mode,
        convergence,
    })
}

/// Cost-reduction table: one row per multi-fidelity directory, compared to
/// the best single-fidelity seed on the same problem.
pub fn summarize(dirs: &[PathBuf]) -> Result<SummaryTable> {
    let dirs: Vec<DirSummary> = dirs.iter().map(|d| summarize_dir(d)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for mf in dirs.iter().filter(|d| d.mode == Mode::Mf) {
        let sf: Vec<&DirSummary> = dirs
            .iter()
            .filter(|d| d.mode == Mode::Sf && d.problem == mf.problem)
            .collect();
        if sf.is_empty() {
            continue;
        }
        let lambda = mf.worst();
        let lambda_b = sf.iter().filter_map(|d| d.best()).min_by(f64::total_cmp);
        rows.push(CostReductionRow {
            problem: mf.problem.clone(),
            mf_dir: mf.dir.clone(),
            lambda,
            lambda_b,
            reduction: lambda.zip(lambda_b).map(|(l, b)| cost_reduction(l, b)),
        });
    }
    if rows.is_empty() {
        return Err(Error::arg(
            "summarize needs at least one mf and one sf run on the same problem",
        ));
    }
    Ok(SummaryTable { dirs, rows })
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or("not converged".to_string(), |v| format!("{v:.3}"));
        writeln!(f, "{:<8} {:<40} {:>16} {:>16} {:>16}", "problem", "mf run", "lambda", "lambda_B", "Lambda (%)")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:<40} {:>16} {:>16} {:>16}",
                r.problem,
                r.mf_dir.display().to_string(),
                show(r.lambda),
                show(r.lambda_b),
                r.reduction.map_or("n/a".to_string(), |v| format!("{v:.2}"))
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "mfosemo", version, about = "Multi-fidelity multi-objective Bayesian optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run campaigns for every seed and write traces.
    Run(RunArgs),
    /// Print the cost-reduction table for finished run directories.
    Summarize {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// JSON manifest; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// tg or ni.
    #[arg(long)]
    pub approximation: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// mf or sf.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Any other manifest field, as `field=value`.
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    pub fn manifest(&self) -> Result<RunManifest> {
        let mut m = match &self.config {
            Some(p) => RunManifest::load(p)?,
            None => RunManifest::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("--set expects FIELD=VALUE, got '{kv}'")))?;
            m.set(k, v)?;
        }
        if let Some(p) = &self.problem {
            m.problem = p.parse()?;
        }
        if let Some(b) = self.budget {
            m.config.total_budget = b;
        }
        if let Some(s) = self.mc_samples {
            m.config.mc_samples = s;
        }
        if let Some(a) = &self.approximation {
            m.config.approximation = a.parse()?;
        }
        if let Some(s) = &self.seeds {
            m.seeds = s.clone();
        }
        if let Some(g) = self.grid_size {
            m.config.candidate_grid_size = g;
        }
        if let Some(mode) = &self.mode {
            m.mode = mode.parse()?;
        }
        if let Some(o) = &self.out {
            m.out = Some(o.clone());
        }
        Ok(m)
    }
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let outcome = run(&args.manifest()?)?;
            println!("wrote {}", outcome.dir.display());
            match outcome.failure {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Summarize { dirs } => {
            print!("{}", summarize(&dirs)?);
            Ok(())
        }
    }
}
