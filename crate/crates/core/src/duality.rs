//! Dual points, duality gaps and gap-safe block elimination.
//!
//! The dual lives in sample space: `θ ∈ ℝⁿ` with
//! `D(θ) = −(1/n) Σ f_i*(−θ_i)`. When the smooth part carries the
//! perturbation `μ_p‖x − x⁰‖²`, that quadratic gets its own dual block
//! `ν ∈ ℝ^{d_active}` and all gaps, radii and tests refer to the perturbed
//! problem; eliminations are then safe for the perturbed optimum only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// Slack used when testing attainment of `λ` in the equicorrelation set.
pub const EQUICORRELATION_TOL: f64 = 1e-7;

/// Surviving blocks of a solver run, with their coordinates laid out block by
/// block.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    blocks: Vec<usize>,
    features: Vec<usize>,
    offsets: Vec<usize>,
    column_bounds: Vec<f64>,
}

impl ActiveSet {
    pub fn full(spec: &ProblemSpec) -> Self {
        Self::from_blocks(spec, (0..spec.num_blocks()).collect())
    }

    pub fn from_blocks(spec: &ProblemSpec, mut blocks: Vec<usize>) -> Self {
        blocks.sort_unstable();
        blocks.dedup();
        let part = spec.partition();
        let bounds = spec.column_bounds();
        let mut features = Vec::new();
        let mut offsets = vec![0];
        for &b in &blocks {
            features.extend_from_slice(part.group(b));
            offsets.push(features.len());
        }
        let column_bounds = blocks.iter().map(|&b| bounds[b]).collect();
        Self {
            blocks,
            features,
            offsets,
            column_bounds,
        }
    }

    /// Block ids, sorted.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Union of the surviving groups, in block order.
    pub fn features(&self) -> &[usize] {
        &self.features
    }

    /// Local coordinate range of the `k`-th surviving block.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn column_bounds(&self) -> &[f64] {
        &self.column_bounds
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains(&self, block: usize) -> bool {
        self.blocks.binary_search(&block).is_ok()
    }

    /// Keeps the surviving blocks at local positions `keep` (ascending).
    fn retain_positions(&self, keep: &[usize]) -> Self {
        let mut features = Vec::new();
        let mut offsets = vec![0];
        for &k in keep {
            features.extend_from_slice(&self.features[self.block_range(k)]);
            offsets.push(features.len());
        }
        Self {
            blocks: keep.iter().map(|&k| self.blocks[k]).collect(),
            features,
            offsets,
            column_bounds: keep.iter().map(|&k| self.column_bounds[k]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub theta: Vec<f64>,
    /// Dual of the perturbation term over the active features; empty when
    /// `μ_p = 0`.
    pub nu: Vec<f64>,
    /// The denominator `max(1, Ω^D(∇F restricted to the active set)/λ)`.
    pub scale_used: f64,
    /// `Ω_j^D((1/n)A_jᵀθ + ν_j)` for each surviving block, in block order.
    pub block_correlations: Vec<f64>,
}

/// Radius of the safe sphere, split into the sample-space part and the part
/// for the perturbation dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeRadius {
    pub theta: f64,
    pub nu: f64,
}

/// Which curvature feeds `r = √(2·curvature·Gap)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusRule {
    /// `n·c_loss`, the inverse strong-concavity modulus of the dual.
    #[default]
    DualCurvature,
    /// The per-sample gradient Lipschitz constant `T`.
    Lipschitz,
}

pub fn safe_radius(gap: f64, curvature: f64) -> Result<f64> {
    if !(curvature > 0.0) {
        return Err(Error::invalid(format!(
            "curvature must be positive, got {curvature}"
        )));
    }
    if gap.is_nan() {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * curvature * gap.max(0.0)).sqrt())
}

impl RadiusRule {
    pub fn radius(self, spec: &ProblemSpec, gap: f64, lipschitz_t: f64) -> Result<SafeRadius> {
        let curvature = match self {
            RadiusRule::DualCurvature => spec.n() as f64 * spec.loss().curvature(),
            RadiusRule::Lipschitz => lipschitz_t,
        };
        let nu = if spec.mu_p() > 0.0 {
            safe_radius(gap, 2.0 * spec.mu_p())?
        } else {
            0.0
        };
        Ok(SafeRadius {
            theta: safe_radius(gap, curvature)?,
            nu,
        })
    }
}

/// Builds the rescaled dual point from the per-sample derivatives at `x`, the
/// gradient of the smooth part over `active.features()` and the active
/// coordinates of `x` (both in local order).
pub(crate) fn dual_point_from_parts(
    spec: &ProblemSpec,
    derivatives: &[f64],
    grad_active: &[f64],
    x_active: &[f64],
    active: &ActiveSet,
) -> DualPoint {
    let reg = spec.regularizer();
    let raw: Vec<f64> = (0..active.num_blocks())
        .map(|k| reg.dual_norm(&grad_active[active.block_range(k)]))
        .collect();
    let top = raw.iter().cloned().fold(0.0, f64::max);
    let scale = if top.is_finite() {
        (top / spec.lambda()).max(1.0)
    } else {
        1.0
    };
    let theta = derivatives.iter().map(|g| -g / scale).collect();
    let nu = if spec.mu_p() > 0.0 {
        let anchor = spec.anchor();
        active
            .features()
            .iter()
            .zip(x_active)
            .map(|(&c, &xc)| -2.0 * spec.mu_p() * (xc - anchor[c]) / scale)
            .collect()
    } else {
        Vec::new()
    };
    DualPoint {
        theta,
        nu,
        scale_used: scale,
        block_correlations: raw.into_iter().map(|r| r / scale).collect(),
    }
}

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&c| x[c]).collect()
}

/// Rescaled dual point at the full-length iterate `x` (zero off the active
/// set). Feasible on the blocks of `active`.
pub fn dual_point(spec: &ProblemSpec, x: &[f64], active: &ActiveSet) -> Result<DualPoint> {
    let derivs = spec.sample_derivatives(x)?;
    let grad = spec.full_gradient(x)?;
    Ok(dual_point_from_parts(
        spec,
        &derivs,
        &gather(&grad, active.features()),
        &gather(x, active.features()),
        active,
    ))
}

/// `P_active(x) − D(θ)` from precomputed margins `z = Ax`, the active
/// coordinates of `x` and `Ω(x)`.
pub(crate) fn gap_from_parts(
    spec: &ProblemSpec,
    z: &[f64],
    x_active: &[f64],
    penalty: f64,
    dual: &DualPoint,
    active: &ActiveSet,
) -> f64 {
    let loss = spec.loss();
    let y = spec.dataset().y();
    let mut fit = 0.0;
    for i in 0..z.len() {
        let conj = loss.conjugate(-dual.theta[i], y[i]);
        if conj == f64::INFINITY {
            return f64::INFINITY;
        }
        fit += loss.value(z[i], y[i]) + conj;
    }
    let mut gap = fit / z.len() as f64 + spec.lambda() * penalty;
    let mu = spec.mu_p();
    if mu > 0.0 {
        let anchor = spec.anchor();
        for (k, &c) in active.features().iter().enumerate() {
            let diff = x_active[k] - anchor[c];
            let nu = dual.nu[k];
            gap += mu * diff * diff - nu * anchor[c] + nu * nu / (4.0 * mu);
        }
    }
    gap
}

/// Duality gap of the sub-problem restricted to `active`; `+∞` when `θ`
/// leaves the conjugate domain.
pub fn duality_gap(
    spec: &ProblemSpec,
    x: &[f64],
    dual: &DualPoint,
    active: &ActiveSet,
) -> Result<f64> {
    Error::check_len(spec.d(), x.len())?;
    Error::check_len(spec.n(), dual.theta.len())?;
    let z = spec.dataset().rows().mul_vec(x);
    Ok(gap_from_parts(
        spec,
        &z,
        &gather(x, active.features()),
        spec.penalty(x),
        dual,
        active,
    ))
}

/// Local positions of the blocks that survive the sphere test.
pub(crate) fn surviving_positions(
    spec: &ProblemSpec,
    dual: &DualPoint,
    radius: SafeRadius,
    active: &ActiveSet,
) -> Vec<usize> {
    let inv_n = 1.0 / spec.n() as f64;
    let lambda = spec.lambda();
    (0..active.num_blocks())
        .filter(|&k| {
            let bound = dual.block_correlations[k]
                + inv_n * active.column_bounds()[k] * radius.theta
                + radius.nu;
            // NaN keeps the block
            !(bound < lambda)
        })
        .collect()
}

/// Removes every block `j` with
/// `(1/n)Ω_j^D(A_jᵀθ) + (1/n)Ω_j^D(A_j)·r < λ` (plus the perturbation
/// margin when present).
pub fn screen(
    spec: &ProblemSpec,
    dual: &DualPoint,
    radius: SafeRadius,
    active: &ActiveSet,
) -> ActiveSet {
    let keep = surviving_positions(spec, dual, radius, active);
    if keep.len() == active.num_blocks() {
        active.clone()
    } else {
        active.retain_positions(&keep)
    }
}

/// Blocks whose dual correlation attains `λ` within `tol`, given the dual
/// optimum computed over the full block set.
pub fn equicorrelation_set(spec: &ProblemSpec, theta_star: &DualPoint, tol: f64) -> Vec<usize> {
    let active = ActiveSet::full(spec);
    (0..active.num_blocks())
        .filter(|&k| (theta_star.block_correlations[k] - spec.lambda()).abs() <= tol)
        .map(|k| active.blocks()[k])
        .collect()
}

/// Recomputes `Ω_j^D((1/n)A_jᵀθ + ν_j)` per block directly from `θ`, for
/// feasibility checks.
pub fn block_correlations(spec: &ProblemSpec, dual: &DualPoint, active: &ActiveSet) -> Vec<f64> {
    let inv_n = 1.0 / spec.n() as f64;
    let mut u: Vec<f64> = spec
        .dataset()
        .rows()
        .tr_mul_vec(&dual.theta)
        .into_iter()
        .map(|v| v * inv_n)
        .collect();
    if !dual.nu.is_empty() {
        for (k, &c) in active.features().iter().enumerate() {
            u[c] += dual.nu[k];
        }
    }
    let reg = spec.regularizer();
    active
        .blocks()
        .iter()
        .map(|&b| reg.dual_norm(&gather(&u, spec.partition().group(b))))
        .collect()
}
