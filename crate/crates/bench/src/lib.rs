//! Fixtures shared by the criterion benchmarks.

use std::sync::Arc;

use adsgd_core::harness::{generate_synthetic, problem_at_ratio, SyntheticParams};
use adsgd_core::{LossKind, ProblemSpec, Regularizer, SolverConfig, SolverKind};

/// Synthetic problem at `ratio·λ_max` over `blocks` contiguous blocks.
pub fn fixture(
    model: LossKind,
    n: usize,
    d: usize,
    blocks: usize,
    ratio: f64,
    seed: u64,
) -> ProblemSpec {
    let params = SyntheticParams::new(n, d, 0.3, 0.1, seed);
    let data = generate_synthetic(&params, model)
        .expect("valid generator parameters")
        .dataset;
    problem_at_ratio(Arc::new(data), model, Regularizer::L1, blocks, 0.0, ratio)
        .expect("nonzero design")
}

/// `η = 0.24/L`, `m = m_per_sample·n`.
pub fn config(spec: &ProblemSpec, solver: SolverKind, m_per_sample: usize) -> SolverConfig {
    let l = spec.lipschitz_constants().expect("nonzero design").l;
    SolverConfig {
        solver,
        eta: Some(0.24 / l),
        inner_m: Some(m_per_sample * spec.n()),
        ..SolverConfig::default()
    }
}
