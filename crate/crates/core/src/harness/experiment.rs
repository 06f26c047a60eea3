use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::libsvm::load_libsvm;
use super::plan::{DataSource, ExperimentPlan};
use super::svg::{render_chart, Series};
use super::synthetic::generate_synthetic;
use super::trace::write_trace_file;
use crate::error::Result;
use crate::problem::{BlockPartition, LossKind, ProblemSpec, Regularizer};
use crate::solvers::{reference_solve, solve, SolveReport, SolverConfig, SolverKind};
use crate::sparse::Dataset;

pub fn load_source(source: &DataSource, model: LossKind) -> Result<Dataset> {
    match source {
        DataSource::File(path) => load_libsvm(path, model),
        DataSource::Synthetic(params) => Ok(generate_synthetic(params, model)?.dataset),
    }
}

/// Problem over `min(blocks, d)` contiguous blocks with `λ = ratio·λ_max`.
pub fn problem_at_ratio(
    dataset: Arc<Dataset>,
    model: LossKind,
    regularizer: Regularizer,
    blocks: usize,
    mu_p: f64,
    ratio: f64,
) -> Result<ProblemSpec> {
    let d = dataset.d();
    let partition = BlockPartition::contiguous(d, blocks.min(d))?;
    let mut spec = ProblemSpec::new(dataset, partition, model, regularizer, 1.0)?;
    if mu_p > 0.0 {
        spec = spec.with_perturbation(mu_p, vec![0.0; d])?;
    }
    let lambda_max = spec.lambda_max()?;
    spec.with_lambda(ratio * lambda_max)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Finished {
        converged: bool,
        /// Elapsed seconds at the first record with `gap ≤ gap_tol`.
        time_to_tol: Option<f64>,
        final_gap: f64,
        outer_iters: usize,
        coordinate_updates: u64,
        trace_file: PathBuf,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub lambda_ratio: f64,
    pub repetition: usize,
    pub seed: u64,
    pub outcome: RunOutcome,
}

/// Averages over the converged repetitions of one solver at one `λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub solver: SolverKind,
    pub lambda_ratio: f64,
    pub runs: usize,
    pub converged: usize,
    pub failed: usize,
    pub mean_time_to_tol_s: Option<f64>,
    pub mean_coordinate_updates: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub lambda_max: f64,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn trace_file_name(solver: SolverKind, ratio: f64, repetition: usize) -> String {
    format!("{solver}_lam{ratio}_rep{repetition}.csv")
}

fn time_to_tol(report: &SolveReport, tol: f64) -> Option<f64> {
    report
        .trace
        .iter()
        .find(|r| r.gap <= tol)
        .map(|r| r.elapsed_s)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(SolverKind, f64)> = Vec::new();
    for r in runs {
        if !keys.contains(&(r.solver, r.lambda_ratio)) {
            keys.push((r.solver, r.lambda_ratio));
        }
    }
    keys.into_iter()
        .map(|(solver, lambda_ratio)| {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.solver == solver && r.lambda_ratio == lambda_ratio)
                .collect();
            let mut times = Vec::new();
            let mut updates = Vec::new();
            let mut failed = 0;
            for r in &group {
                match &r.outcome {
                    RunOutcome::Finished {
                        time_to_tol: Some(t),
                        coordinate_updates,
                        ..
                    } => {
                        times.push(*t);
                        updates.push(*coordinate_updates as f64);
                    }
                    RunOutcome::Finished { .. } => {}
                    RunOutcome::Failed(_) => failed += 1,
                }
            }
            SummaryRow {
                solver,
                lambda_ratio,
                runs: group.len(),
                converged: times.len(),
                failed,
                mean_time_to_tol_s: mean(&times),
                mean_coordinate_updates: mean(&updates),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct RunRow<'a> {
    solver: SolverKind,
    lambda_ratio: f64,
    repetition: usize,
    seed: u64,
    status: &'a str,
    time_to_tol_s: Option<f64>,
    final_gap: Option<f64>,
    outer_iters: Option<usize>,
    coordinate_updates: Option<u64>,
    error: &'a str,
}

fn write_runs(path: &Path, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in runs {
        let row = match &r.outcome {
            RunOutcome::Finished {
                converged,
                time_to_tol,
                final_gap,
                outer_iters,
                coordinate_updates,
                ..
            } => RunRow {
                solver: r.solver,
                lambda_ratio: r.lambda_ratio,
                repetition: r.repetition,
                seed: r.seed,
                status: if *converged { "converged" } else { "max_outer" },
                time_to_tol_s: *time_to_tol,
                final_gap: Some(*final_gap),
                outer_iters: Some(*outer_iters),
                coordinate_updates: Some(*coordinate_updates),
                error: "",
            },
            RunOutcome::Failed(msg) => RunRow {
                solver: r.solver,
                lambda_ratio: r.lambda_ratio,
                repetition: r.repetition,
                seed: r.seed,
                status: "failed",
                time_to_tol_s: None,
                final_gap: None,
                outer_iters: None,
                coordinate_updates: None,
                error: msg,
            },
        };
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in summary {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (solver, λ, repetition) triple and writes into `plan.output`:
/// one trace CSV per run, `runs.csv`, `summary.csv`, and one SVG chart per
/// `λ` when enabled. A failing solve is recorded and the rest continue.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let dataset = Arc::new(load_source(&plan.source, plan.model)?);
    std::fs::create_dir_all(&plan.output)?;
    let mut runs = Vec::new();
    let mut lambda_max = f64::NAN;
    for &ratio in &plan.lambda_ratios {
        let spec = problem_at_ratio(
            dataset.clone(),
            plan.model,
            plan.regularizer,
            plan.blocks,
            plan.mu_p,
            ratio,
        )?;
        lambda_max = spec.lambda() / ratio;
        let mut series = Vec::new();
        for base in &plan.solvers {
            for rep in 0..plan.repetitions {
                let config = SolverConfig {
                    seed: base.seed + rep as u64,
                    ..base.clone()
                };
                let outcome = match solve(&spec, &config) {
                    Ok(report) => {
                        let name = trace_file_name(config.solver, ratio, rep);
                        let path = plan.output.join(&name);
                        write_trace_file(&path, &report.trace)?;
                        if rep == 0 {
                            series.push((config.solver, report.trace.clone()));
                        }
                        RunOutcome::Finished {
                            converged: report.converged,
                            time_to_tol: time_to_tol(&report, config.gap_tol),
                            final_gap: report.final_gap(),
                            outer_iters: report.outer_iters,
                            coordinate_updates: report.coordinate_updates,
                            trace_file: path,
                        }
                    }
                    Err(e) => RunOutcome::Failed(e.to_string()),
                };
                runs.push(RunRecord {
                    solver: config.solver,
                    lambda_ratio: ratio,
                    repetition: rep,
                    seed: config.seed,
                    outcome,
                });
            }
        }
        if plan.svg && !series.is_empty() {
            // P* from the oracle; the best observed objective if it fails
            let p_star = reference_solve(&spec, 1e-10)
                .map(|o| o.objective)
                .unwrap_or_else(|_| {
                    series
                        .iter()
                        .flat_map(|(_, t)| t.iter().map(|r| r.objective))
                        .fold(f64::INFINITY, f64::min)
                });
            let chart: Vec<Series> = series
                .into_iter()
                .map(|(solver, trace)| Series {
                    label: solver.to_string(),
                    points: trace
                        .iter()
                        .map(|r| (r.elapsed_s, (r.objective - p_star).max(0.0)))
                        .collect(),
                })
                .collect();
            let title = format!("{} λ = {ratio}·λmax", plan.model);
            std::fs::write(
                plan.output.join(format!("chart_lam{ratio}.svg")),
                render_chart(&title, &chart),
            )?;
        }
    }
    let summary = summarize(&runs);
    write_runs(&plan.output.join("runs.csv"), &runs)?;
    write_summary(&plan.output.join("summary.csv"), &summary)?;
    Ok(ExperimentReport {
        lambda_max,
        runs,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finished(t: Option<f64>, updates: u64) -> RunOutcome {
        RunOutcome::Finished {
            converged: t.is_some(),
            time_to_tol: t,
            final_gap: 0.0,
            outer_iters: 1,
            coordinate_updates: updates,
            trace_file: PathBuf::new(),
        }
    }

    #[test]
    fn summary_skips_failures_and_unconverged_runs() {
        let mk = |solver, rep, outcome| RunRecord {
            solver,
            lambda_ratio: 0.5,
            repetition: rep,
            seed: rep as u64,
            outcome,
        };
        let runs = vec![
            mk(SolverKind::Adsgd, 0, finished(Some(1.0), 10)),
            mk(SolverKind::Adsgd, 1, finished(Some(2.0), 30)),
            mk(SolverKind::Adsgd, 2, RunOutcome::Failed("boom".into())),
            mk(SolverKind::Mrbcd, 0, finished(None, 99)),
        ];
        let s = summarize(&runs);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].runs, s[0].converged, s[0].failed), (3, 2, 1));
        assert_eq!(s[0].mean_time_to_tol_s, Some(1.5));
        assert_eq!(s[0].mean_coordinate_updates, Some(20.0));
        assert_eq!(s[1].mean_time_to_tol_s, None);
    }
}
