#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use adsgd_core::harness::{
    load_source, problem_at_ratio, run_experiment, write_trace_file, DataSource, ExperimentPlan,
    SyntheticParams,
};
use adsgd_core::{
    reference_solve, solve, Dataset, LossKind, ProblemSpec, RadiusRule, Regularizer, SolverConfig,
    SolverKind,
};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Only the output directory can come from the environment.
const OUT_DIR_ENV: &str = "ADSGD_OUT_DIR";

const EXIT_USAGE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_SOLVE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "adsgd",
    version,
    about = "Sparse learning with doubly stochastic solvers and gap-safe screening"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a summary.
    Solve(SolveArgs),
    /// Print the smallest λ with an all-zero solution.
    LambdaMax(ProblemArgs),
    /// Run an experiment plan file.
    Bench {
        plan: PathBuf,
        /// Output directory; overrides the plan and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the deterministic reference solver and print the support.
    Oracle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 0.5)]
        lambda_ratio: f64,
        #[arg(long, default_value_t = 1e-10)]
        gap_tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lasso,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Penalty {
    L1,
    Group,
}

#[derive(Clone, Copy, ValueEnum)]
enum Radius {
    Curvature,
    Lipschitz,
}

#[derive(Args)]
struct ProblemArgs {
    /// LIBSVM file.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    data: Option<PathBuf>,
    /// Synthetic instance `n,d,sparsity,noise`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, value_enum, default_value = "lasso")]
    model: Model,
    #[arg(long, value_enum, default_value = "l1")]
    regularizer: Penalty,
    /// Number of contiguous blocks (capped at d).
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    /// Strength of the `μ_p‖x‖²` perturbation.
    #[arg(long, default_value_t = 0.0)]
    mu_p: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.5)]
    lambda_ratio: f64,
    #[arg(long, default_value = "adsgd")]
    solver: SolverKind,
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    /// Base inner-loop length (default 2n).
    #[arg(long)]
    inner_m: Option<usize>,
    /// Step size (default 1/(16L)).
    #[arg(long, conflicts_with = "theory_mode")]
    eta: Option<f64>,
    /// Batch ⌈T/L⌉ and η = 1/(16L).
    #[arg(long)]
    theory_mode: bool,
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable the screening test.
    #[arg(long)]
    no_screening: bool,
    #[arg(long, value_enum, default_value = "curvature")]
    radius: Radius,
    /// Directory for trace.csv and solution.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Model {
    fn loss(self) -> LossKind {
        match self {
            Model::Lasso => LossKind::SquaredError,
            Model::Logistic => LossKind::Logistic,
        }
    }
}

impl Penalty {
    fn regularizer(self) -> Regularizer {
        match self {
            Penalty::L1 => Regularizer::L1,
            Penalty::Group => Regularizer::GroupL2,
        }
    }
}

impl ProblemArgs {
    fn source(&self) -> Result<DataSource> {
        Ok(match (&self.data, &self.synthetic) {
            (Some(path), _) => DataSource::File(path.clone()),
            (None, Some(s)) => DataSource::Synthetic(SyntheticParams::parse(s, self.data_seed)?),
            (None, None) => unreachable!("clap requires one data source"),
        })
    }

    fn dataset(&self) -> Result<Arc<Dataset>> {
        let source = self.source()?;
        let ds = load_source(&source, self.model.loss()).with_context(|| match &source {
            DataSource::File(p) => format!("loading {}", p.display()),
            DataSource::Synthetic(_) => "generating synthetic data".to_string(),
        })?;
        Ok(Arc::new(ds))
    }

    fn spec(&self, ratio: f64) -> Result<ProblemSpec> {
        if !(ratio > 0.0) {
            return Err(adsgd_core::Error::InvalidArgument(format!(
                "lambda ratio must be positive, got {ratio}"
            ))
            .into());
        }
        let ds = self.dataset()?;
        Ok(problem_at_ratio(
            ds,
            self.model.loss(),
            self.regularizer.regularizer(),
            self.blocks,
            self.mu_p,
            ratio,
        )?)
    }
}

fn output_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
}

fn write_solution(path: &Path, x: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "index,value")?;
    for (j, v) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
        writeln!(f, "{j},{v}")?;
    }
    f.flush()?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let spec = args.problem.spec(args.lambda_ratio)?;
    let mu_p = args.problem.mu_p;
    let config = SolverConfig {
        solver: args.solver,
        eta: args.eta,
        inner_m: args.inner_m,
        batch_size: args.batch_size,
        max_outer: args.max_outer,
        gap_tol: args.gap_tol,
        seed: args.seed,
        theory_mode: args.theory_mode,
        strong_convexity: (args.theory_mode && mu_p > 0.0).then_some(2.0 * mu_p),
        screening: !args.no_screening,
        radius_rule: match args.radius {
            Radius::Curvature => RadiusRule::DualCurvature,
            Radius::Lipschitz => RadiusRule::Lipschitz,
        },
        ..SolverConfig::default()
    };
    let report = solve(&spec, &config)?;
    let last = report.trace.last();
    println!("solver              {}", report.solver);
    println!(
        "n, d, blocks        {}, {}, {}",
        spec.n(),
        spec.d(),
        spec.num_blocks()
    );
    println!(
        "lambda              {:e} ({} x lambda_max)",
        spec.lambda(),
        args.lambda_ratio
    );
    println!("converged           {}", report.converged);
    println!("outer iterations    {}", report.outer_iters);
    println!(
        "objective           {:.12e}",
        last.map_or(f64::NAN, |r| r.objective)
    );
    println!("duality gap         {:e}", report.final_gap());
    println!(
        "nonzeros            {}",
        report.x_final.iter().filter(|v| **v != 0.0).count()
    );
    println!("active blocks       {}", report.final_active.len());
    println!("coordinate updates  {}", report.coordinate_updates);
    println!("wall time (s)       {:.3}", report.wall_time);
    if let Some(dir) = output_dir(args.out) {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_trace_file(dir.join("trace.csv"), &report.trace)?;
        write_solution(&dir.join("solution.csv"), &report.x_final)?;
        println!("wrote               {}", dir.display());
    }
    Ok(())
}

fn cmd_lambda_max(args: ProblemArgs) -> Result<()> {
    let spec = args.spec(1.0)?;
    println!("{:e}", spec.lambda());
    Ok(())
}

fn cmd_bench(plan_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut plan = ExperimentPlan::load(plan_path)
        .with_context(|| format!("reading plan {}", plan_path.display()))?;
    if let Some(dir) = output_dir(out) {
        plan.output = dir;
    }
    let report = run_experiment(&plan)?;
    println!("lambda_max {:e}", report.lambda_max);
    println!(
        "{:<10} {:>8} {:>5} {:>9} {:>7} {:>14} {:>14}",
        "solver", "ratio", "runs", "converged", "failed", "mean time (s)", "mean updates"
    );
    for row in &report.summary {
        let fmt =
            |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
        println!(
            "{:<10} {:>8} {:>5} {:>9} {:>7} {:>14} {:>14}",
            row.solver.to_string(),
            row.lambda_ratio,
            row.runs,
            row.converged,
            row.failed,
            fmt(row.mean_time_to_tol_s, 4),
            fmt(row.mean_coordinate_updates, 0)
        );
    }
    println!("outputs in {}", plan.output.display());
    Ok(())
}

fn cmd_oracle(problem: ProblemArgs, ratio: f64, tol: f64) -> Result<()> {
    let spec = problem.spec(ratio)?;
    let oracle = reference_solve(&spec, tol)?;
    let support: Vec<String> = oracle
        .x()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j.to_string())
        .collect();
    println!("lambda     {:e}", spec.lambda());
    println!("objective  {:.12e}", oracle.objective);
    println!("gap        {:e}", oracle.gap);
    println!("blocks     {:?}", oracle.support);
    println!("support    {}", support.join(" "));
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use adsgd_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidArgument(_) | E::DimensionMismatch { .. }) => EXIT_INVALID,
        Some(E::Parse { .. } | E::Io(_) | E::Csv(_)) => EXIT_DATA,
        Some(E::DegenerateProblem(_) | E::Diverged { .. } | E::ConvergenceFailure { .. }) => {
            EXIT_SOLVE
        }
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_DATA,
        None => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::LambdaMax(args) => cmd_lambda_max(args),
        Command::Bench { plan, out } => cmd_bench(&plan, out),
        Command::Oracle {
            problem,
            lambda_ratio,
            gap_tol,
        } => cmd_oracle(problem, lambda_ratio, gap_tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
