//! Accelerated doubly stochastic gradient descent with dynamic gap-safe
//! screening for `min_x (1/n) Σ f_i(a_iᵀx) + λ Ω(x)`, together with the
//! ASGD, ProxSVRG and MRBCD baselines and a deterministic reference solver.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod duality;
pub mod error;
pub mod harness;
pub mod problem;
pub mod solvers;
pub mod sparse;

pub use duality::{
    dual_point, duality_gap, equicorrelation_set, safe_radius, screen, ActiveSet, DualPoint,
    RadiusRule, SafeRadius,
};
pub use error::{Error, Result};
pub use problem::{BlockPartition, LipschitzConstants, LossKind, ProblemSpec, Regularizer};
pub use solvers::{
    adsgd_solve, asgd_solve, mrbcd_solve, proxsvrg_solve, reference_solve, solve, vr_gradient,
    OracleSolution, SolveReport, SolverConfig, SolverKind, TraceRecord,
};
pub use sparse::{CsrMatrix, Dataset};
