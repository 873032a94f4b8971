mod common;

use std::fs;
use std::path::PathBuf;

use common::quick_config;
use mfosemo::acquisition::Approximation;
use mfosemo::benchmarks::ProblemName;
use mfosemo::cli::{
    aggregate, aggregate_csv, cost_reduction, main_with_args, run, summarize, trace_file_name, Mode, RunManifest,
    Trace, TraceRow, AGGREGATE_FILE,
};
use proptest::prelude::*;

fn manifest(dir: PathBuf, mode: Mode, seeds: Vec<u64>) -> RunManifest {
    RunManifest {
        problem: ProblemName::Bc,
        mode,
        seeds,
        out: Some(dir),
        config: quick_config(6.0),
    }
}

#[test]
fn manifest_json_round_trip_and_overrides() {
    let m = RunManifest {
        out: Some("runs/x".into()),
        seeds: vec![3, 4],
        ..manifest("ignored".into(), Mode::Sf, vec![])
    };
    let back = RunManifest::from_json(&m.to_json()).unwrap();
    assert_eq!(back, m);

    let m = RunManifest::from_json(r#"{"problem": "zdt3", "budget": 12, "seeds": [1], "mode": "sf"}"#).unwrap();
    assert_eq!(m.problem, ProblemName::Zdt3);
    assert_eq!(m.config.total_budget, 12.0);
    assert_eq!(m.mode, Mode::Sf);

    let mut m = RunManifest::default();
    m.set("mc-samples", "10").unwrap();
    m.set("approximation", "ni").unwrap();
    m.set("problem", "DTLZ1").unwrap();
    assert_eq!(m.config.mc_samples, 10);
    assert_eq!(m.config.approximation, Approximation::Ni);
    assert_eq!(m.problem, ProblemName::Dtlz1);
    assert_eq!(m.set("no_such_field", "1").unwrap_err().exit_code(), 1);
    assert!(RunManifest::from_json(r#"{"problem": "nope"}"#).is_err());
    assert!(RunManifest::from_json(r#"{"bogus": 1}"#).is_err());
}

#[test]
fn run_writes_traces_and_aggregate_that_recompute() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&manifest(tmp.path().join("mf"), Mode::Mf, vec![0, 1])).unwrap();
    assert!(out.failure.is_none());
    let traces: Vec<Trace> = [0, 1]
        .iter()
        .map(|s| Trace::read(&out.dir.join(trace_file_name(*s))).unwrap())
        .collect();
    assert_eq!(traces, out.traces);
    let written = fs::read_to_string(out.dir.join(AGGREGATE_FILE)).unwrap();
    assert_eq!(written, aggregate_csv(&aggregate(&traces)));
    let header = written.lines().next().unwrap();
    assert_eq!(header, "cumulative_cost,n_seeds,mean_log10_phv_diff,var_log10_phv_diff");
    let trace_header = fs::read_to_string(out.dir.join(trace_file_name(0))).unwrap();
    assert!(trace_header.starts_with("iteration,cumulative_cost,fidelity_vector,x1,x2,y1,y2,phv_diff\n"));
    assert_eq!(out.info.seeds.len(), 2);
    assert!(out.info.convergence_threshold.unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&manifest(tmp.path().join("a"), Mode::Mf, vec![7])).unwrap();
    let b = run(&manifest(tmp.path().join("b"), Mode::Mf, vec![7])).unwrap();
    for name in [trace_file_name(7), AGGREGATE_FILE.to_string()] {
        assert_eq!(fs::read(a.dir.join(&name)).unwrap(), fs::read(b.dir.join(&name)).unwrap());
    }
}

#[test]
fn single_fidelity_traces_name_the_highest_vector() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&manifest(tmp.path().join("sf"), Mode::Sf, vec![0])).unwrap();
    assert!(out.traces[0].rows.iter().all(|r| r.fidelity_vector == vec![2, 2]));
    assert!(out.traces[0].rows.iter().all(|r| r.iteration == 0 || r.phv_diff.is_some()));
}

#[test]
fn summarize_reports_cost_reduction() {
    let tmp = tempfile::tempdir().unwrap();
    let mf = tmp.path().join("mf");
    let sf = tmp.path().join("sf");
    run(&manifest(mf.clone(), Mode::Mf, vec![0])).unwrap();
    run(&manifest(sf.clone(), Mode::Sf, vec![0])).unwrap();
    let table = summarize(&[mf.clone(), sf.clone()]).unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];
    match (row.lambda, row.lambda_b) {
        (Some(l), Some(b)) => assert_eq!(row.reduction, Some(cost_reduction(l, b))),
        _ => assert_eq!(row.reduction, None),
    }
    assert!(table.to_string().contains("lambda_B"));
    assert!(summarize(&[mf]).is_err());
}

#[test]
fn cost_reduction_examples() {
    assert_eq!(cost_reduction(10.0, 10.0), 0.0);
    assert_eq!(cost_reduction(5.0, 10.0), 50.0);
    assert!((cost_reduction(4.2, 2000.0) - 99.79).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(main_with_args(["mfosemo", "run", "--problem", "nope"]), 1);
    assert_eq!(main_with_args(["mfosemo", "run", "--mode", "xf"]), 1);
    assert_eq!(main_with_args(["mfosemo", "frobnicate"]), 1);
    assert_eq!(main_with_args(["mfosemo", "--help"]), 0);
    let missing = tmp.path().join("missing.json");
    assert_eq!(main_with_args(["mfosemo".into(), "run".into(), "--config".into(), missing.into_os_string()]), 3);
    // A regular file where the output directory should be.
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let args = ["mfosemo", "run", "--budget", "4", "--out", blocker.to_str().unwrap()];
    assert_eq!(main_with_args(args), 3);
    // Budget below the initial design.
    let out = tmp.path().join("small");
    let args = ["mfosemo", "run", "--budget", "1", "--out", out.to_str().unwrap()];
    assert_eq!(main_with_args(args), 1);
}

#[test]
fn flags_override_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.json");
    let base = manifest(tmp.path().join("from-file"), Mode::Mf, vec![1, 2]);
    fs::write(&path, base.to_json()).unwrap();
    let out = tmp.path().join("from-flag");
    let args = [
        "mfosemo",
        "run",
        "--config",
        path.to_str().unwrap(),
        "--seeds",
        "5",
        "--budget",
        "4",
        "--set",
        "track_phv=false",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(main_with_args(args), 0);
    assert!(out.join(trace_file_name(5)).exists());
    assert!(!tmp.path().join("from-file").exists());
}

fn row_strategy(dim: usize, k: usize) -> impl Strategy<Value = TraceRow> {
    (
        0usize..500,
        0.0..1e4f64,
        prop::collection::vec(1usize..4, k),
        prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), dim),
        prop::collection::vec(-1e6..1e6f64, k),
        prop::option::of(0.0..1e3f64),
    )
        .prop_map(|(iteration, cumulative_cost, fidelity_vector, input, output, phv_diff)| TraceRow {
            iteration,
            cumulative_cost,
            fidelity_vector,
            input,
            output,
            phv_diff,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traces_round_trip(rows in prop::collection::vec(row_strategy(3, 2), 1..30)) {
        let t = Trace { dim: 3, n_objectives: 2, rows };
        let parsed = Trace::parse(&t.to_csv().unwrap()).unwrap();
        prop_assert_eq!(parsed, t);
    }
}
