//! Stochastic solvers with optional gap-safe screening, and the
//! deterministic reference solver used as a test oracle.

mod engine;
mod reference;
mod workspace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use reference::{reference_solve, OracleSolution, REFERENCE_MAX_ITER};

use crate::duality::{ActiveSet, RadiusRule};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Doubly stochastic, variance reduced, with screening.
    Adsgd,
    /// Mini-batch proximal SGD over all active coordinates, with screening.
    Asgd,
    ProxSvrg,
    Mrbcd,
    Reference,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Adsgd,
        SolverKind::Asgd,
        SolverKind::ProxSvrg,
        SolverKind::Mrbcd,
        SolverKind::Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Adsgd => "adsgd",
            SolverKind::Asgd => "asgd",
            SolverKind::ProxSvrg => "proxsvrg",
            SolverKind::Mrbcd => "mrbcd",
            SolverKind::Reference => "reference",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown solver '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub solver: SolverKind,
    /// Step size; `None` means `1/(16L)`.
    pub eta: Option<f64>,
    /// Base inner-loop length `m`; `None` means `2n`.
    pub inner_m: Option<usize>,
    pub batch_size: usize,
    pub max_outer: usize,
    pub gap_tol: f64,
    pub seed: u64,
    /// Batch `⌈T/L⌉`, `η = 1/(16L)`, and `m = ⌈65qL/μ⌉` when
    /// `strong_convexity` is given.
    pub theory_mode: bool,
    pub strong_convexity: Option<f64>,
    /// Run the gap-safe test (ADSGD and ASGD only).
    pub screening: bool,
    /// Screen every `screen_every`-th outer iteration.
    pub screen_every: usize,
    pub radius_rule: RadiusRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Adsgd,
            eta: None,
            inner_m: None,
            batch_size: 10,
            max_outer: 200,
            gap_tol: 1e-6,
            seed: 0,
            theory_mode: false,
            strong_convexity: None,
            screening: true,
            screen_every: 1,
            radius_rule: RadiusRule::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(solver: SolverKind) -> Self {
        Self {
            solver,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!(
                    "step size must be positive, got {eta}"
                )));
            }
        }
        if self.inner_m == Some(0) {
            return Err(Error::invalid("inner loop length must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.max_outer == 0 {
            return Err(Error::invalid("max_outer must be at least 1"));
        }
        if !(self.gap_tol > 0.0) {
            return Err(Error::invalid(format!(
                "gap tolerance must be positive, got {}",
                self.gap_tol
            )));
        }
        if self.screen_every == 0 {
            return Err(Error::invalid("screen_every must be at least 1"));
        }
        if let Some(mu) = self.strong_convexity {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::invalid(format!(
                    "strong convexity must be positive, got {mu}"
                )));
            }
        }
        Ok(())
    }
}

/// One row per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    pub gap: f64,
    pub active_blocks: usize,
    pub active_features: usize,
}

/// Blocks removed by the screening test at a given outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub outer_iter: usize,
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub x_final: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub outer_iters: usize,
    pub wall_time: f64,
    /// Coordinates touched by proximal updates, summed over all inner steps.
    pub coordinate_updates: u64,
    pub eliminations: Vec<Elimination>,
    /// Blocks still active when the run stopped.
    pub final_active: Vec<usize>,
}

impl SolveReport {
    /// Active blocks in effect after the screening of outer iteration `k`
    /// (1-based), reconstructed from the elimination log.
    pub fn active_after(&self, q: usize, k: usize) -> Vec<usize> {
        let mut alive = vec![true; q];
        for e in self.eliminations.iter().take_while(|e| e.outer_iter <= k) {
            for &b in &e.blocks {
                alive[b] = false;
            }
        }
        (0..q).filter(|&b| alive[b]).collect()
    }

    pub fn final_gap(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.gap)
    }
}

/// Step size, batch and inner-loop length after defaults and theory-mode
/// overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub eta: f64,
    pub batch_size: usize,
    pub inner_m: usize,
    pub lipschitz_l: f64,
    pub lipschitz_t: f64,
}

pub fn resolve_params(spec: &ProblemSpec, config: &SolverConfig) -> Result<ResolvedParams> {
    config.validate()?;
    let lc = spec.lipschitz_constants()?;
    let n = spec.n();
    let (eta, batch_size, inner_m) = if config.theory_mode {
        let batch = ((lc.t / lc.l).ceil() as usize).clamp(1, n);
        let m = match config.strong_convexity {
            Some(mu) => (65.0 * spec.num_blocks() as f64 * lc.l / mu).ceil() as usize,
            None => config.inner_m.unwrap_or(2 * n),
        };
        (1.0 / (16.0 * lc.l), batch, m.max(1))
    } else {
        (
            config.eta.unwrap_or(1.0 / (16.0 * lc.l)),
            config.batch_size.min(n),
            config.inner_m.unwrap_or(2 * n),
        )
    };
    if config.theory_mode && eta >= 1.0 / (4.0 * lc.l) {
        return Err(Error::invalid("theory mode needs eta < 1/(4L)"));
    }
    Ok(ResolvedParams {
        eta,
        batch_size,
        inner_m,
        lipschitz_l: lc.l,
        lipschitz_t: lc.t,
    })
}

/// Runs the configured solver.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    match config.solver {
        SolverKind::Reference => {
            config.validate()?;
            Ok(reference_solve(spec, config.gap_tol)?.report)
        }
        SolverKind::Adsgd => engine::run(
            spec,
            config,
            engine::Variant::DoublyStochastic {
                screening: config.screening,
            },
        ),
        SolverKind::Mrbcd => engine::run(
            spec,
            config,
            engine::Variant::DoublyStochastic { screening: false },
        ),
        SolverKind::Asgd => engine::run(spec, config, engine::Variant::SinglyStochastic),
        SolverKind::ProxSvrg => engine::run(spec, config, engine::Variant::ProxSvrg),
    }
}

pub fn adsgd_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    solve(
        spec,
        &SolverConfig {
            solver: SolverKind::Adsgd,
            ..config.clone()
        },
    )
}

pub fn asgd_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    solve(
        spec,
        &SolverConfig {
            solver: SolverKind::Asgd,
            ..config.clone()
        },
    )
}

pub fn proxsvrg_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    solve(
        spec,
        &SolverConfig {
            solver: SolverKind::ProxSvrg,
            ..config.clone()
        },
    )
}

pub fn mrbcd_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    solve(
        spec,
        &SolverConfig {
            solver: SolverKind::Mrbcd,
            ..config.clone()
        },
    )
}

/// `∇_{G_j}F_I(x) − ∇_{G_j}F_I(x̃) + μ̃_{G_j}` over the full coordinate space.
pub fn vr_gradient(
    spec: &ProblemSpec,
    x: &[f64],
    x_tilde: &[f64],
    mu_tilde: &[f64],
    batch: &[usize],
    block: usize,
) -> Result<Vec<f64>> {
    let d = spec.d();
    for v in [x, x_tilde, mu_tilde] {
        Error::check_len(d, v.len())?;
    }
    if batch.is_empty() {
        return Err(Error::invalid("batch is empty"));
    }
    if block >= spec.num_blocks() {
        return Err(Error::invalid(format!("block {block} out of range")));
    }
    if let Some(&i) = batch.iter().find(|&&i| i >= spec.n()) {
        return Err(Error::invalid(format!("sample {i} out of range")));
    }
    let ws = workspace::Workspace::new(spec, ActiveSet::full(spec));
    let local = |v: &[f64]| -> Vec<f64> { ws.active.features().iter().map(|&c| v[c]).collect() };
    let (xl, xtl, mul) = (local(x), local(x_tilde), local(mu_tilde));
    let snapshot = ws.derivatives(&ws.margins(&xtl));
    let mut out = vec![0.0; spec.partition().group(block).len()];
    ws.vr_block_gradient(&xl, &xtl, &snapshot, &mul, batch, block, &mut out);
    Ok(out)
}

/// Inner-loop length `⌈m·q_k/q⌉`, floored at one while any block is active.
pub fn inner_iterations(m: usize, active_blocks: usize, total_blocks: usize) -> usize {
    if active_blocks == 0 {
        return 0;
    }
    let scaled = (m as u128 * active_blocks as u128).div_ceil(total_blocks as u128);
    (scaled as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_budget_scales_with_active_blocks() {
        assert_eq!(inner_iterations(100, 3, 10), 30);
        assert_eq!(inner_iterations(100, 10, 10), 100);
        assert_eq!(inner_iterations(7, 1, 10), 1);
        assert_eq!(inner_iterations(15, 1, 10), 2);
        assert_eq!(inner_iterations(100, 0, 10), 0);
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("sag".parse::<SolverKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SolverConfig {
                eta: Some(0.0),
                ..ok.clone()
            },
            SolverConfig {
                eta: Some(f64::NAN),
                ..ok.clone()
            },
            SolverConfig {
                batch_size: 0,
                ..ok.clone()
            },
            SolverConfig {
                inner_m: Some(0),
                ..ok.clone()
            },
            SolverConfig {
                gap_tol: 0.0,
                ..ok.clone()
            },
            SolverConfig {
                max_outer: 0,
                ..ok.clone()
            },
            SolverConfig {
                screen_every: 0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn elimination_log_reconstructs_active_sets() {
        let report = SolveReport {
            solver: SolverKind::Adsgd,
            x_final: vec![],
            trace: vec![],
            converged: true,
            outer_iters: 3,
            wall_time: 0.0,
            coordinate_updates: 0,
            eliminations: vec![
                Elimination {
                    outer_iter: 1,
                    blocks: vec![2],
                },
                Elimination {
                    outer_iter: 3,
                    blocks: vec![0],
                },
            ],
            final_active: vec![1, 3],
        };
        assert_eq!(report.active_after(4, 0), vec![0, 1, 2, 3]);
        assert_eq!(report.active_after(4, 2), vec![0, 1, 3]);
        assert_eq!(report.active_after(4, 3), vec![1, 3]);
    }
}
