//! Shared outer loop: snapshot, dual point, gap, optional screening, then a
//! variant-specific inner loop whose averaged iterate seeds the next round.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::workspace::Workspace;
use super::{
    inner_iterations, resolve_params, Elimination, SolveReport, SolverConfig, TraceRecord,
};
use crate::duality::{dual_point_from_parts, gap_from_parts, surviving_positions, ActiveSet};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Variant {
    /// One sampled block per step with a variance-reduced gradient.
    /// `screening: false` is MRBCD.
    DoublyStochastic { screening: bool },
    /// All active coordinates per step, plain mini-batch gradient.
    SinglyStochastic,
    /// All coordinates per step, variance-reduced, never screens.
    ProxSvrg,
}

impl Variant {
    fn screens(self, config: &SolverConfig) -> bool {
        match self {
            Variant::DoublyStochastic { screening } => screening,
            Variant::SinglyStochastic => config.screening,
            Variant::ProxSvrg => false,
        }
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    n: usize,
    batch: Vec<usize>,
    full: bool,
}

impl Sampler {
    fn new(seed: u64, n: usize, batch_size: usize) -> Self {
        let full = batch_size >= n;
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            batch: if full {
                (0..n).collect()
            } else {
                vec![0; batch_size]
            },
            full,
        }
    }

    /// Uniform with replacement; the whole dataset when the batch covers it.
    fn next_batch(&mut self) -> &[usize] {
        if !self.full {
            for slot in self.batch.iter_mut() {
                *slot = self.rng.random_range(0..self.n);
            }
        }
        &self.batch
    }

    fn next_block(&mut self, q: usize) -> usize {
        self.rng.random_range(0..q)
    }
}

/// Snapshot quantities at `x̃` for the current workspace.
struct Snapshot {
    z: Vec<f64>,
    derivs: Vec<f64>,
    grad: Vec<f64>,
}

impl Snapshot {
    fn at(ws: &Workspace<'_>, x: &[f64]) -> Self {
        let z = ws.margins(x);
        let derivs = ws.derivatives(&z);
        let grad = ws.gradient(&derivs, x);
        Self { z, derivs, grad }
    }
}

pub(crate) fn run(
    spec: &ProblemSpec,
    config: &SolverConfig,
    variant: Variant,
) -> Result<SolveReport> {
    let params = resolve_params(spec, config)?;
    let start = Instant::now();
    let q = spec.num_blocks();
    let threshold = params.eta * spec.lambda();
    let screens = variant.screens(config);

    let mut ws = Workspace::new(spec, ActiveSet::full(spec));
    let mut sampler = Sampler::new(config.seed, spec.n(), params.batch_size);
    // x̂_0 = 0
    let mut x_hat = vec![0.0; ws.dim()];
    let mut trace = Vec::new();
    let mut eliminations = Vec::new();
    let mut coordinate_updates = 0u64;
    let mut converged = false;
    let mut outer_iters = 0;
    let mut scratch = Vec::new();

    for k in 1..=config.max_outer {
        outer_iters = k;
        let mut x_tilde = std::mem::take(&mut x_hat);
        let mut snap = Snapshot::at(&ws, &x_tilde);

        let dual = dual_point_from_parts(spec, &snap.derivs, &snap.grad, &x_tilde, &ws.active);
        let penalty = ws.penalty(&x_tilde);
        let objective = ws.smooth_value(&snap.z, &x_tilde) + spec.lambda() * penalty;
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration: k });
        }
        let gap = gap_from_parts(spec, &snap.z, &x_tilde, penalty, &dual, &ws.active);

        if gap <= config.gap_tol {
            trace.push(TraceRecord {
                outer_iter: k,
                elapsed_s: start.elapsed().as_secs_f64(),
                objective,
                gap,
                active_blocks: ws.active.num_blocks(),
                active_features: ws.dim(),
            });
            x_hat = x_tilde;
            converged = true;
            break;
        }

        // an infinite gap means θ left the conjugate domain: skip the test
        if screens && gap.is_finite() && (k - 1) % config.screen_every == 0 {
            let radius = config.radius_rule.radius(spec, gap, params.lipschitz_t)?;
            let keep = surviving_positions(spec, &dual, radius, &ws.active);
            if keep.len() < ws.active.num_blocks() {
                let removed: Vec<usize> = (0..ws.active.num_blocks())
                    .filter(|p| keep.binary_search(p).is_err())
                    .map(|p| ws.active.blocks()[p])
                    .collect();
                let dropped_nonzero = removed.iter().any(|&b| {
                    let p = ws.active.blocks().binary_search(&b).unwrap();
                    x_tilde[ws.active.block_range(p)].iter().any(|&v| v != 0.0)
                });
                let next = ActiveSet::from_blocks(
                    spec,
                    keep.iter().map(|&p| ws.active.blocks()[p]).collect(),
                );
                ws.restrict(next, &mut [&mut x_tilde, &mut snap.grad]);
                if dropped_nonzero {
                    // the snapshot must describe the restricted iterate
                    snap = Snapshot::at(&ws, &x_tilde);
                }
                eliminations.push(Elimination {
                    outer_iter: k,
                    blocks: removed,
                });
            }
        }

        trace.push(TraceRecord {
            outer_iter: k,
            elapsed_s: start.elapsed().as_secs_f64(),
            objective,
            gap,
            active_blocks: ws.active.num_blocks(),
            active_features: ws.dim(),
        });

        let q_k = ws.active.num_blocks();
        let m_k = match variant {
            Variant::DoublyStochastic { .. } | Variant::SinglyStochastic => {
                inner_iterations(params.inner_m, q_k, q)
            }
            Variant::ProxSvrg => params.inner_m,
        };
        if m_k == 0 || ws.dim() == 0 {
            x_hat = x_tilde;
            continue;
        }

        x_hat = match variant {
            Variant::DoublyStochastic { .. } => {
                let (x_avg, updates) = doubly_stochastic_inner(
                    &ws,
                    &x_tilde,
                    &snap,
                    m_k,
                    params.eta,
                    threshold,
                    &mut sampler,
                    &mut scratch,
                );
                coordinate_updates += updates;
                x_avg
            }
            Variant::SinglyStochastic => {
                coordinate_updates += (m_k * ws.dim()) as u64;
                full_vector_inner(
                    &ws,
                    &x_tilde,
                    None,
                    m_k,
                    params.eta,
                    threshold,
                    &mut sampler,
                )
            }
            Variant::ProxSvrg => {
                coordinate_updates += (m_k * ws.dim()) as u64;
                full_vector_inner(
                    &ws,
                    &x_tilde,
                    Some(&snap),
                    m_k,
                    params.eta,
                    threshold,
                    &mut sampler,
                )
            }
        };
        if x_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }
    }

    Ok(SolveReport {
        solver: config.solver,
        x_final: ws.expand(&x_hat),
        trace,
        converged,
        outer_iters,
        wall_time: start.elapsed().as_secs_f64(),
        coordinate_updates,
        eliminations,
        final_active: ws.active.blocks().to_vec(),
    })
}

/// Block-sampled inner loop; returns the running mean of the inner iterates
/// and the number of coordinates updated.
#[allow(clippy::too_many_arguments)]
fn doubly_stochastic_inner(
    ws: &Workspace<'_>,
    x_tilde: &[f64],
    snap: &Snapshot,
    m_k: usize,
    eta: f64,
    threshold: f64,
    sampler: &mut Sampler,
    scratch: &mut Vec<f64>,
) -> (Vec<f64>, u64) {
    let reg = ws.spec.regularizer();
    let q_k = ws.active.num_blocks();
    let mut x = x_tilde.to_vec();
    // lazily accumulated Σ_t x^t: `summed[c]` iterates of coordinate c are in `sum[c]`
    let mut sum = vec![0.0; x.len()];
    let mut summed = vec![0usize; x.len()];
    let mut updates = 0u64;
    for t in 1..=m_k {
        let batch = sampler.next_batch().to_vec();
        let block = sampler.next_block(q_k);
        let range = ws.active.block_range(block);
        scratch.clear();
        scratch.resize(range.len(), 0.0);
        ws.vr_block_gradient(
            &x,
            x_tilde,
            &snap.derivs,
            &snap.grad,
            &batch,
            block,
            scratch,
        );
        for c in range.clone() {
            sum[c] += x[c] * (t - 1 - summed[c]) as f64;
            summed[c] = t - 1;
        }
        let xb = &mut x[range.clone()];
        for (v, g) in xb.iter_mut().zip(scratch.iter()) {
            *v -= eta * g;
        }
        reg.prox_in_place(xb, threshold);
        updates += range.len() as u64;
    }
    let inv = 1.0 / m_k as f64;
    let avg = x
        .iter()
        .zip(sum.iter().zip(&summed))
        .map(|(&xc, (&s, &done))| (s + xc * (m_k - done) as f64) * inv)
        .collect();
    (avg, updates)
}

/// Inner loop that touches every active coordinate per step: ASGD when
/// `snap` is `None`, ProxSVRG otherwise.
fn full_vector_inner(
    ws: &Workspace<'_>,
    x_tilde: &[f64],
    snap: Option<&Snapshot>,
    m_k: usize,
    eta: f64,
    threshold: f64,
    sampler: &mut Sampler,
) -> Vec<f64> {
    let mut x = x_tilde.to_vec();
    let mut sum = vec![0.0; x.len()];
    let mut grad = vec![0.0; x.len()];
    for _ in 0..m_k {
        let batch = sampler.next_batch().to_vec();
        match snap {
            Some(s) => ws.vr_full_gradient(&x, x_tilde, &s.derivs, &s.grad, &batch, &mut grad),
            None => ws.batch_gradient(&x, &batch, &mut grad),
        }
        for (v, g) in x.iter_mut().zip(&grad) {
            *v -= eta * g;
        }
        ws.prox_all(&mut x, threshold);
        for (s, v) in sum.iter_mut().zip(&x) {
            *s += v;
        }
    }
    let inv = 1.0 / m_k as f64;
    sum.into_iter().map(|s| s * inv).collect()
}
