use std::path::Path;
use std::sync::Arc;

use adsgd_core::harness::{
    generate_orthonormal, generate_synthetic, load_libsvm, problem_at_ratio, read_trace,
    read_trace_file, run_experiment, trace_file_name, write_trace, DataSource, ExperimentPlan,
    RunOutcome, SyntheticParams,
};
use adsgd_core::{
    reference_solve, Error, LossKind, Regularizer, SolverConfig, SolverKind, TraceRecord,
};
use proptest::prelude::*;

fn plan(
    dir: &Path,
    solvers: &[SolverKind],
    ratios: Vec<f64>,
    repetitions: usize,
) -> ExperimentPlan {
    let params = SyntheticParams::new(80, 160, 0.3, 0.1, 3);
    let data = Arc::new(
        generate_synthetic(&params, LossKind::SquaredError)
            .unwrap()
            .dataset,
    );
    let spec =
        problem_at_ratio(data, LossKind::SquaredError, Regularizer::L1, 10, 0.0, 0.5).unwrap();
    let eta = 0.24 / spec.lipschitz_constants().unwrap().l;
    ExperimentPlan {
        source: DataSource::Synthetic(params),
        model: LossKind::SquaredError,
        regularizer: Regularizer::L1,
        blocks: 10,
        mu_p: 0.0,
        lambda_ratios: ratios,
        solvers: solvers
            .iter()
            .map(|&s| SolverConfig {
                solver: s,
                eta: Some(eta),
                inner_m: Some(50 * 80),
                seed: 7,
                ..SolverConfig::default()
            })
            .collect(),
        repetitions,
        output: dir.to_path_buf(),
        svg: true,
    }
}

/// Trace rows with the wall-clock column removed.
fn without_time(records: &[TraceRecord]) -> Vec<(usize, u64, u64, usize, usize)> {
    records
        .iter()
        .map(|r| {
            (
                r.outer_iter,
                r.objective.to_bits(),
                r.gap.to_bits(),
                r.active_blocks,
                r.active_features,
            )
        })
        .collect()
}

#[test]
fn three_solvers_write_traces_summary_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let solvers = [SolverKind::Adsgd, SolverKind::Mrbcd, SolverKind::ProxSvrg];
    let report = run_experiment(&plan(dir.path(), &solvers, vec![0.5], 1)).unwrap();
    for s in solvers {
        let trace = read_trace_file(dir.path().join(trace_file_name(s, 0.5, 0))).unwrap();
        assert!(trace.last().unwrap().gap <= 1e-6, "{s}");
    }
    assert_eq!(report.summary.len(), 3);
    assert!(report
        .summary
        .iter()
        .all(|row| row.converged == 1 && row.failed == 0));
    for f in ["summary.csv", "runs.csv", "chart_lam0.5.svg"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with(
        "solver,lambda_ratio,runs,converged,failed,mean_time_to_tol_s,mean_coordinate_updates"
    ));
}

#[test]
fn lambda_max_ratio_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&plan(dir.path(), &SolverKind::ALL, vec![1.0], 1)).unwrap();
    for run in &report.runs {
        match &run.outcome {
            RunOutcome::Finished {
                converged,
                outer_iters,
                trace_file,
                ..
            } => {
                assert!(converged, "{}", run.solver);
                assert!(*outer_iters <= 1, "{}", run.solver);
                assert!(read_trace_file(trace_file).unwrap()[0].gap <= 1e-6);
            }
            RunOutcome::Failed(e) => panic!("{}: {e}", run.solver),
        }
    }
}

#[test]
fn repetitions_use_consecutive_seeds_and_rerun_identically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let solvers = [SolverKind::Adsgd];
    let first = run_experiment(&plan(a.path(), &solvers, vec![0.5], 3)).unwrap();
    run_experiment(&plan(b.path(), &solvers, vec![0.5], 3)).unwrap();
    let seeds: Vec<u64> = first.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![7, 8, 9]);
    for rep in 0..3 {
        let name = trace_file_name(SolverKind::Adsgd, 0.5, rep);
        let ta = read_trace_file(a.path().join(&name)).unwrap();
        let tb = read_trace_file(b.path().join(&name)).unwrap();
        assert_eq!(without_time(&ta), without_time(&tb));
    }
}

#[test]
fn summary_mean_is_the_mean_of_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&plan(dir.path(), &[SolverKind::Adsgd], vec![0.5], 3)).unwrap();
    let times: Vec<f64> = report
        .runs
        .iter()
        .map(|r| match r.outcome {
            RunOutcome::Finished {
                time_to_tol: Some(t),
                ..
            } => t,
            _ => panic!("run did not converge"),
        })
        .collect();
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    assert!((report.summary[0].mean_time_to_tol_s.unwrap() - mean).abs() <= 1e-9);
}

#[test]
fn failing_runs_are_recorded_and_the_rest_continue() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(
        dir.path(),
        &[SolverKind::ProxSvrg, SolverKind::Adsgd],
        vec![0.5],
        1,
    );
    p.solvers[0].eta = Some(1e6);
    let report = run_experiment(&p).unwrap();
    assert!(matches!(report.runs[0].outcome, RunOutcome::Failed(_)));
    assert!(matches!(
        report.runs[1].outcome,
        RunOutcome::Finished {
            converged: true,
            ..
        }
    ));
    assert_eq!(report.summary[0].failed, 1);
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(runs.contains("failed"));
}

#[test]
fn plan_file_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.svm"), "1 1:1 2:2\n-1 1:3 2:4\n").unwrap();
    let text = "data = \"d.svm\"\nmodel = \"lasso\"\nsolvers = [\"reference\"]\nlambda_ratios = [0.5]\noutput = \"res\"\n";
    std::fs::write(dir.path().join("plan.toml"), text).unwrap();
    let p = ExperimentPlan::load(dir.path().join("plan.toml")).unwrap();
    let report = run_experiment(&p).unwrap();
    assert_eq!(report.lambda_max, 1.0);
    assert!(dir.path().join("res/summary.csv").is_file());
}

#[test]
fn libsvm_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.svm");
    std::fs::write(&path, "1 1:0.5 3:-2\n0\n# comment only\n-1 2:1e-3\n").unwrap();
    let ds = load_libsvm(&path, LossKind::SquaredError).unwrap();
    assert_eq!((ds.n(), ds.d()), (3, 3));
    assert_eq!(
        ds.rows().to_dense(),
        vec![vec![0.5, 0.0, -2.0], vec![0.0; 3], vec![0.0, 1e-3, 0.0]]
    );
    assert_eq!(ds.y(), &[1.0, 0.0, -1.0]);
    let ds = load_libsvm(&path, LossKind::Logistic).unwrap();
    // three classes: the first half of the sorted labels, {-1}, becomes 1
    assert_eq!(ds.y(), &[0.0, 0.0, 1.0]);
    assert!(matches!(
        load_libsvm(dir.path().join("missing"), LossKind::Logistic),
        Err(Error::Io(_))
    ));
}

#[test]
fn planted_support_gives_a_plausible_oracle_support() {
    let params = SyntheticParams::new(200, 500, 0.3, 0.1, 5).with_support(10);
    let data = Arc::new(
        generate_synthetic(&params, LossKind::SquaredError)
            .unwrap()
            .dataset,
    );
    let spec = problem_at_ratio(
        data,
        LossKind::SquaredError,
        Regularizer::L1,
        500,
        0.0,
        0.25,
    )
    .unwrap();
    let support = reference_solve(&spec, 1e-10).unwrap().support.len();
    assert!((5..=30).contains(&support), "{support}");
}

#[test]
fn noiseless_orthonormal_design_recovers_the_planted_support() {
    for seed in 0..5 {
        let synth =
            generate_orthonormal(&SyntheticParams::new(50, 20, 1.0, 0.0, seed).with_support(4))
                .unwrap();
        let data = Arc::new(synth.dataset);
        let spec =
            problem_at_ratio(data, LossKind::SquaredError, Regularizer::L1, 20, 0.0, 0.25).unwrap();
        let oracle = reference_solve(&spec, 1e-12).unwrap();
        let planted: Vec<usize> = (0..20).filter(|&j| synth.planted[j] != 0.0).collect();
        assert_eq!(oracle.support, planted);
    }
}

fn record() -> impl Strategy<Value = TraceRecord> {
    let finite = prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(1e-300),
        Just(5e-324)
    ];
    (
        0usize..10_000,
        0.0f64..1e4,
        finite.clone(),
        finite,
        0usize..1000,
        0usize..100_000,
    )
        .prop_map(
            |(outer_iter, elapsed_s, objective, gap, active_blocks, active_features)| TraceRecord {
                outer_iter,
                elapsed_s,
                objective,
                gap,
                active_blocks,
                active_features,
            },
        )
}

proptest! {
    #[test]
    fn trace_csv_round_trips_bit_exactly(records in prop::collection::vec(record(), 1..20)) {
        let mut buf = Vec::new();
        write_trace(&mut buf, &records).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            prop_assert_eq!(a.gap.to_bits(), b.gap.to_bits());
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn infinite_gap_survives_the_csv() {
    let r = TraceRecord {
        outer_iter: 1,
        elapsed_s: 0.0,
        objective: 1.0,
        gap: f64::INFINITY,
        active_blocks: 1,
        active_features: 1,
    };
    let mut buf = Vec::new();
    write_trace(&mut buf, &[r]).unwrap();
    assert_eq!(read_trace(buf.as_slice()).unwrap(), vec![r]);
}
