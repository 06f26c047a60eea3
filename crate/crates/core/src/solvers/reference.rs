//! Deterministic accelerated proximal gradient (FISTA with gradient-based
//! adaptive restart). Used as the oracle for every stochastic solver.

use std::time::Instant;

use super::workspace::Workspace;
use super::{SolveReport, SolverKind, TraceRecord};
use crate::duality::{dual_point_from_parts, gap_from_parts, ActiveSet, DualPoint};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

pub const REFERENCE_MAX_ITER: usize = 500_000;
const GAP_CHECK_EVERY: usize = 5;
const POWER_ITERS: usize = 500;
// margin over the power-iteration estimate of ‖A‖₂²
const STEP_SAFETY: f64 = 1.05;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub report: SolveReport,
    /// Rescaled dual point at `x*` over all blocks.
    pub dual: DualPoint,
    /// Blocks with a nonzero coordinate in `x*`.
    pub support: Vec<usize>,
    pub objective: f64,
    pub gap: f64,
}

impl OracleSolution {
    pub fn x(&self) -> &[f64] {
        &self.report.x_final
    }
}

/// Largest eigenvalue of `AᵀA` by power iteration from a fixed start.
fn gram_spectral_radius(ws: &Workspace<'_>) -> f64 {
    let d = ws.dim();
    // deterministic, non-degenerate start vector
    let mut v: Vec<f64> = (0..d)
        .map(|k| 1.0 + ((k * 7919) % 101) as f64 / 101.0)
        .collect();
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        let w = ws.a.tr_mul_vec(&ws.a.mul_vec(&v));
        let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = w;
        if (next - est).abs() <= 1e-12 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

pub fn reference_solve(spec: &ProblemSpec, tol: f64) -> Result<OracleSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let start = Instant::now();
    let active = ActiveSet::full(spec);
    let ws = Workspace::new(spec, active);
    let n = spec.n() as f64;
    let lipschitz =
        STEP_SAFETY * spec.loss().curvature() * gram_spectral_radius(&ws) / n + 2.0 * spec.mu_p();
    if !(lipschitz > 0.0) {
        return Err(Error::DegenerateProblem("design matrix is all zero".into()));
    }
    let step = 1.0 / lipschitz;
    let threshold = step * spec.lambda();
    let d = ws.dim();

    let mut x = vec![0.0; d];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    let mut best_gap = f64::INFINITY;

    for it in 0..REFERENCE_MAX_ITER {
        if it % GAP_CHECK_EVERY == 0 {
            let z = ws.margins(&x);
            let derivs = ws.derivatives(&z);
            let grad = ws.gradient(&derivs, &x);
            let dual = dual_point_from_parts(spec, &derivs, &grad, &x, &ws.active);
            let penalty = ws.penalty(&x);
            let objective = ws.smooth_value(&z, &x) + spec.lambda() * penalty;
            if !objective.is_finite() {
                return Err(Error::Diverged { iteration: it });
            }
            let gap = gap_from_parts(spec, &z, &x, penalty, &dual, &ws.active);
            best_gap = best_gap.min(gap);
            trace.push(TraceRecord {
                outer_iter: it,
                elapsed_s: start.elapsed().as_secs_f64(),
                objective,
                gap,
                active_blocks: ws.active.num_blocks(),
                active_features: d,
            });
            if gap <= tol {
                let support = (0..ws.active.num_blocks())
                    .filter(|&k| x[ws.active.block_range(k)].iter().any(|&v| v != 0.0))
                    .map(|k| ws.active.blocks()[k])
                    .collect();
                let report = SolveReport {
                    solver: SolverKind::Reference,
                    x_final: ws.expand(&x),
                    trace,
                    converged: true,
                    outer_iters: it,
                    wall_time: start.elapsed().as_secs_f64(),
                    coordinate_updates: (it * d) as u64,
                    eliminations: Vec::new(),
                    final_active: ws.active.blocks().to_vec(),
                };
                return Ok(OracleSolution {
                    report,
                    dual,
                    support,
                    objective,
                    gap,
                });
            }
        }

        let zy = ws.margins(&y);
        let grad = ws.gradient(&ws.derivatives(&zy), &y);
        let mut x_next: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        ws.prox_all(&mut x_next, threshold);

        // restart momentum when it points against the proximal gradient step
        let restart: f64 = y
            .iter()
            .zip(&x_next)
            .zip(&x)
            .map(|((yy, xn), xo)| (yy - xn) * (xn - xo))
            .sum();
        if restart > 0.0 {
            t = 1.0;
            y.clone_from(&x_next);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for ((yy, xn), xo) in y.iter_mut().zip(&x_next).zip(&x) {
                *yy = xn + beta * (xn - xo);
            }
            t = t_next;
        }
        x = x_next;
    }
    Err(Error::ConvergenceFailure {
        iterations: REFERENCE_MAX_ITER,
        best_gap,
    })
}
