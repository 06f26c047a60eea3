#![allow(dead_code)]

use std::sync::Arc;

use adsgd_core::harness::{generate_synthetic, SyntheticParams};
use adsgd_core::{BlockPartition, LossKind, ProblemSpec, Regularizer, SolverConfig, SolverKind};

/// Step size as a fraction of `1/L`; kept under the `1/(4L)` bound.
pub const ETA_SCALE: f64 = 0.24;

pub struct Instance {
    pub model: LossKind,
    pub n: usize,
    pub d: usize,
    pub density: f64,
    pub blocks: usize,
    pub ratio: f64,
    pub mu_p: f64,
    pub seed: u64,
}

impl Instance {
    pub fn new(model: LossKind, n: usize, d: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            d,
            density: 0.3,
            blocks: 10,
            ratio: 0.5,
            mu_p: 0.0,
            seed,
        }
    }

    pub fn blocks(mut self, q: usize) -> Self {
        self.blocks = q;
        self
    }

    pub fn ratio(mut self, r: f64) -> Self {
        self.ratio = r;
        self
    }

    pub fn mu_p(mut self, mu: f64) -> Self {
        self.mu_p = mu;
        self
    }

    pub fn density(mut self, p: f64) -> Self {
        self.density = p;
        self
    }

    pub fn build(&self) -> ProblemSpec {
        let params = SyntheticParams::new(self.n, self.d, self.density, 0.1, self.seed);
        let data = generate_synthetic(&params, self.model).unwrap().dataset;
        let partition = BlockPartition::contiguous(self.d, self.blocks).unwrap();
        let mut spec =
            ProblemSpec::new(Arc::new(data), partition, self.model, Regularizer::L1, 1.0).unwrap();
        if self.mu_p > 0.0 {
            spec = spec
                .with_perturbation(self.mu_p, vec![0.0; self.d])
                .unwrap();
        }
        let lambda_max = spec.lambda_max().unwrap();
        spec.with_lambda(self.ratio * lambda_max).unwrap()
    }
}

/// `η = ETA_SCALE/L` and `m = m_per_sample·n`.
pub fn tuned(
    spec: &ProblemSpec,
    solver: SolverKind,
    seed: u64,
    m_per_sample: usize,
) -> SolverConfig {
    let l = spec.lipschitz_constants().unwrap().l;
    SolverConfig {
        solver,
        eta: Some(ETA_SCALE / l),
        inner_m: Some(m_per_sample * spec.n()),
        seed,
        ..SolverConfig::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}
