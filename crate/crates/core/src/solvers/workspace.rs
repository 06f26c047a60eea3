//! The active sub-problem: design columns and anchor restricted to the
//! surviving blocks, in block-contiguous local coordinates.

use crate::duality::ActiveSet;
use crate::problem::ProblemSpec;
use crate::sparse::CsrMatrix;

pub(crate) struct Workspace<'a> {
    pub spec: &'a ProblemSpec,
    pub active: ActiveSet,
    /// `A_S`, rows are samples.
    pub a: CsrMatrix,
    pub anchor: Vec<f64>,
}

impl<'a> Workspace<'a> {
    pub fn new(spec: &'a ProblemSpec, active: ActiveSet) -> Self {
        let a = spec.dataset().rows().select_columns(active.features());
        let anchor = active
            .features()
            .iter()
            .map(|&c| spec.anchor()[c])
            .collect();
        Self {
            spec,
            active,
            a,
            anchor,
        }
    }

    pub fn dim(&self) -> usize {
        self.active.num_features()
    }

    /// Replaces the active set and carries the given local vectors along.
    pub fn restrict(&mut self, next: ActiveSet, carried: &mut [&mut Vec<f64>]) {
        let mut pos = std::collections::HashMap::with_capacity(self.dim());
        for (k, &c) in self.active.features().iter().enumerate() {
            pos.insert(c, k);
        }
        let keep: Vec<usize> = next.features().iter().map(|c| pos[c]).collect();
        for v in carried.iter_mut() {
            let restricted: Vec<f64> = keep.iter().map(|&k| v[k]).collect();
            **v = restricted;
        }
        self.a = self.a.select_columns(&keep);
        self.anchor = keep.iter().map(|&k| self.anchor[k]).collect();
        self.active = next;
    }

    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x)
    }

    pub fn derivatives(&self, z: &[f64]) -> Vec<f64> {
        let loss = self.spec.loss();
        let y = self.spec.dataset().y();
        z.iter()
            .zip(y)
            .map(|(&zi, &yi)| loss.derivative(zi, yi))
            .collect()
    }

    /// `(1/n) A_Sᵀ f′ + 2μ_p (x − x⁰)`.
    pub fn gradient(&self, derivs: &[f64], x: &[f64]) -> Vec<f64> {
        let inv_n = 1.0 / self.spec.n() as f64;
        let mu2 = 2.0 * self.spec.mu_p();
        let mut g = self.a.tr_mul_vec(derivs);
        for ((gk, &xk), &ak) in g.iter_mut().zip(x).zip(&self.anchor) {
            *gk = *gk * inv_n + mu2 * (xk - ak);
        }
        g
    }

    /// `F(x)` over the sub-problem, plus the constant perturbation of the
    /// screened coordinates so that it equals the full smooth value.
    pub fn smooth_value(&self, z: &[f64], x: &[f64]) -> f64 {
        let loss = self.spec.loss();
        let y = self.spec.dataset().y();
        let fit: f64 = z
            .iter()
            .zip(y)
            .map(|(&zi, &yi)| loss.value(zi, yi))
            .sum::<f64>()
            / self.spec.n() as f64;
        let mu = self.spec.mu_p();
        if mu == 0.0 {
            return fit;
        }
        let total_anchor: f64 = self.spec.anchor().iter().map(|a| a * a).sum();
        let local_anchor: f64 = self.anchor.iter().map(|a| a * a).sum();
        let local: f64 = x
            .iter()
            .zip(&self.anchor)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        fit + mu * (local + (total_anchor - local_anchor).max(0.0))
    }

    pub fn penalty(&self, x: &[f64]) -> f64 {
        let reg = self.spec.regularizer();
        (0..self.active.num_blocks())
            .map(|k| reg.value(&x[self.active.block_range(k)]))
            .sum()
    }

    pub fn prox_all(&self, x: &mut [f64], threshold: f64) {
        let reg = self.spec.regularizer();
        for k in 0..self.active.num_blocks() {
            reg.prox_in_place(&mut x[self.active.block_range(k)], threshold);
        }
    }

    /// Variance-reduced block gradient
    /// `∇_{G}F_I(x) − ∇_{G}F_I(x̃) + μ̃_G`, written into `out` (block length).
    /// `snapshot_derivs[i] = f_i′(a_iᵀx̃)`.
    #[allow(clippy::too_many_arguments)]
    pub fn vr_block_gradient(
        &self,
        x: &[f64],
        x_tilde: &[f64],
        snapshot_derivs: &[f64],
        mu_tilde: &[f64],
        batch: &[usize],
        block: usize,
        out: &mut [f64],
    ) {
        let range = self.active.block_range(block);
        let (lo, hi) = (range.start, range.end);
        let loss = self.spec.loss();
        let y = self.spec.dataset().y();
        out.iter_mut().for_each(|v| *v = 0.0);
        for &i in batch {
            let diff = loss.derivative(self.a.row_dot(i, x), y[i]) - snapshot_derivs[i];
            if diff == 0.0 {
                continue;
            }
            let (idx, val) = self.a.row_range(i, lo, hi);
            for (&c, &v) in idx.iter().zip(val) {
                out[c - lo] += v * diff;
            }
        }
        let inv_b = 1.0 / batch.len() as f64;
        let mu2 = 2.0 * self.spec.mu_p();
        for (k, o) in out.iter_mut().enumerate() {
            let c = lo + k;
            *o = *o * inv_b + mu_tilde[c] + mu2 * (x[c] - x_tilde[c]);
        }
    }

    /// Plain mini-batch gradient over all local coordinates.
    pub fn batch_gradient(&self, x: &[f64], batch: &[usize], out: &mut [f64]) {
        let loss = self.spec.loss();
        let y = self.spec.dataset().y();
        out.iter_mut().for_each(|v| *v = 0.0);
        for &i in batch {
            let fp = loss.derivative(self.a.row_dot(i, x), y[i]);
            if fp == 0.0 {
                continue;
            }
            let (idx, val) = self.a.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out[c] += v * fp;
            }
        }
        let inv_b = 1.0 / batch.len() as f64;
        let mu2 = 2.0 * self.spec.mu_p();
        for (c, o) in out.iter_mut().enumerate() {
            *o = *o * inv_b + mu2 * (x[c] - self.anchor[c]);
        }
    }

    /// Variance-reduced mini-batch gradient over all local coordinates.
    pub fn vr_full_gradient(
        &self,
        x: &[f64],
        x_tilde: &[f64],
        snapshot_derivs: &[f64],
        mu_tilde: &[f64],
        batch: &[usize],
        out: &mut [f64],
    ) {
        let loss = self.spec.loss();
        let y = self.spec.dataset().y();
        out.iter_mut().for_each(|v| *v = 0.0);
        for &i in batch {
            let diff = loss.derivative(self.a.row_dot(i, x), y[i]) - snapshot_derivs[i];
            if diff == 0.0 {
                continue;
            }
            let (idx, val) = self.a.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out[c] += v * diff;
            }
        }
        let inv_b = 1.0 / batch.len() as f64;
        let mu2 = 2.0 * self.spec.mu_p();
        for (c, o) in out.iter_mut().enumerate() {
            *o = *o * inv_b + mu_tilde[c] + mu2 * (x[c] - x_tilde[c]);
        }
    }

    /// Full-length iterate with zeros on screened coordinates.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.d()];
        for (&c, &v) in self.active.features().iter().zip(x) {
            out[c] = v;
        }
        out
    }
}
