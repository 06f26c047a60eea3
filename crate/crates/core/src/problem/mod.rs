//! Regularized empirical risk `P(x) = (1/n) Σ f_i(a_iᵀx) + μ_p‖x − x⁰‖² + λ Ω(x)`.

mod loss;
mod partition;
mod regularizer;

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

pub(crate) use loss::sigmoid;
pub use loss::LossKind;
pub use partition::BlockPartition;
pub use regularizer::{soft_threshold, Regularizer};

use crate::error::{Error, Result};
use crate::sparse::Dataset;

// exact eigen-decomposition of the block Gram matrix up to this block size
const EXACT_SPECTRAL_MAX: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzConstants {
    /// Block-wise per-sample bound.
    pub l: f64,
    /// Full-gradient per-sample bound.
    pub t: f64,
    pub per_block_l: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    dataset: Arc<Dataset>,
    partition: BlockPartition,
    loss: LossKind,
    reg: Regularizer,
    lambda: f64,
    mu_p: f64,
    anchor: Vec<f64>,
    column_bounds: OnceLock<Vec<f64>>,
}

impl ProblemSpec {
    pub fn new(
        dataset: Arc<Dataset>,
        partition: BlockPartition,
        loss: LossKind,
        reg: Regularizer,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if dataset.n() == 0 || dataset.d() == 0 {
            return Err(Error::invalid("dataset is empty"));
        }
        Error::check_len(dataset.d(), partition.dim())?;
        if loss == LossKind::Logistic && !dataset.is_binary() {
            return Err(Error::invalid("logistic loss needs labels in {0, 1}"));
        }
        let d = dataset.d();
        Ok(Self {
            dataset,
            partition,
            loss,
            reg,
            lambda,
            mu_p: 0.0,
            anchor: vec![0.0; d],
            column_bounds: OnceLock::new(),
        })
    }

    /// Adds `μ_p‖x − x⁰‖²` to the smooth part.
    pub fn with_perturbation(mut self, mu_p: f64, anchor: Vec<f64>) -> Result<Self> {
        if !(mu_p >= 0.0 && mu_p.is_finite()) {
            return Err(Error::invalid(format!(
                "mu_p must be nonnegative, got {mu_p}"
            )));
        }
        Error::check_len(self.d(), anchor.len())?;
        self.mu_p = mu_p;
        self.anchor = anchor;
        Ok(self)
    }

    /// Same problem at a different regularization weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let mut out = self.clone();
        out.lambda = lambda;
        Ok(out)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn dataset_arc(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu_p(&self) -> f64 {
        self.mu_p
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn d(&self) -> usize {
        self.dataset.d()
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    /// `Ω(x) = Σ_j Ω_j(x_{G_j})`.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.partition
            .groups()
            .iter()
            .map(|g| {
                buf.clear();
                buf.extend(g.iter().map(|&c| x[c]));
                self.reg.value(&buf)
            })
            .sum()
    }

    fn perturbation(&self, x: &[f64]) -> f64 {
        if self.mu_p == 0.0 {
            return 0.0;
        }
        self.mu_p
            * x.iter()
                .zip(&self.anchor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
    }

    /// Smooth part `F(x) + μ_p‖x − x⁰‖²`.
    pub fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.d(), x.len())?;
        let ds = &self.dataset;
        let y = ds.y();
        let sum: f64 = (0..ds.n())
            .map(|i| self.loss.value(ds.rows().row_dot(i, x), y[i]))
            .sum();
        Ok(sum / ds.n() as f64 + self.perturbation(x))
    }

    pub fn primal_objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.smooth_value(x)? + self.lambda * self.penalty(x))
    }

    /// Per-sample derivatives `f_i′(a_iᵀx)`.
    pub fn sample_derivatives(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.d(), x.len())?;
        let ds = &self.dataset;
        let y = ds.y();
        Ok((0..ds.n())
            .map(|i| self.loss.derivative(ds.rows().row_dot(i, x), y[i]))
            .collect())
    }

    /// `∇F(x) = (1/n) Σ a_i f_i′(a_iᵀx) + 2μ_p(x − x⁰)`.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let deriv = self.sample_derivatives(x)?;
        let inv_n = 1.0 / self.n() as f64;
        let mut g = self.dataset.rows().tr_mul_vec(&deriv);
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = *gj * inv_n + 2.0 * self.mu_p * (x[j] - self.anchor[j]);
        }
        Ok(g)
    }

    /// Mini-batch gradient restricted to block `block`, in the block's
    /// coordinate order.
    pub fn partial_gradient(&self, x: &[f64], batch: &[usize], block: usize) -> Result<Vec<f64>> {
        Error::check_len(self.d(), x.len())?;
        if batch.is_empty() {
            return Err(Error::invalid("batch is empty"));
        }
        if block >= self.num_blocks() {
            return Err(Error::invalid(format!("block {block} out of range")));
        }
        let ds = &self.dataset;
        if let Some(&i) = batch.iter().find(|&&i| i >= ds.n()) {
            return Err(Error::invalid(format!("sample {i} out of range")));
        }
        let group = self.partition.group(block);
        let mut out = vec![0.0; group.len()];
        for &i in batch {
            let fp = self.loss.derivative(ds.rows().row_dot(i, x), ds.y()[i]);
            if fp == 0.0 {
                continue;
            }
            let (idx, val) = ds.rows().row(i);
            for (k, &c) in group.iter().enumerate() {
                if let Ok(p) = idx.binary_search(&c) {
                    out[k] += val[p] * fp;
                }
            }
        }
        let inv_b = 1.0 / batch.len() as f64;
        for (k, &c) in group.iter().enumerate() {
            out[k] = out[k] * inv_b + 2.0 * self.mu_p * (x[c] - self.anchor[c]);
        }
        Ok(out)
    }

    pub fn lipschitz_constants(&self) -> Result<LipschitzConstants> {
        let ds = &self.dataset;
        let q = self.num_blocks();
        let mut per_block = vec![0.0f64; q];
        let mut t_raw = 0.0f64;
        let mut acc = vec![0.0f64; q];
        for i in 0..ds.n() {
            let (idx, val) = ds.rows().row(i);
            let mut row_sq = 0.0;
            for (&c, &v) in idx.iter().zip(val) {
                acc[self.partition.block_of(c)] += v * v;
                row_sq += v * v;
            }
            for &c in idx {
                let b = self.partition.block_of(c);
                per_block[b] = per_block[b].max(acc[b]);
                acc[b] = 0.0;
            }
            t_raw = t_raw.max(row_sq);
        }
        if t_raw == 0.0 {
            return Err(Error::DegenerateProblem("design matrix is all zero".into()));
        }
        let c = self.loss.curvature();
        let shift = 2.0 * self.mu_p;
        let per_block_l: Vec<f64> = per_block.iter().map(|v| c * v + shift).collect();
        let l = per_block_l.iter().cloned().fold(0.0, f64::max);
        Ok(LipschitzConstants {
            l,
            t: c * t_raw + shift,
            per_block_l,
        })
    }

    /// Smallest λ for which `x = 0` is optimal: `max_j Ω_j^D(∇_{G_j}F(0))`.
    pub fn lambda_max(&self) -> Result<f64> {
        let g = self.full_gradient(&vec![0.0; self.d()])?;
        let mut buf = Vec::new();
        Ok(self
            .partition
            .groups()
            .iter()
            .map(|grp| {
                buf.clear();
                buf.extend(grp.iter().map(|&c| g[c]));
                self.reg.dual_norm(&buf)
            })
            .fold(0.0, f64::max))
    }

    /// `Ω_j^D(A_j)` per block: the operator norm of the column block from
    /// `ℓ2` into the block's dual norm. Max column norm for L1 blocks, the
    /// spectral norm for group blocks.
    pub fn column_bounds(&self) -> &[f64] {
        self.column_bounds
            .get_or_init(|| self.compute_column_bounds())
    }

    fn compute_column_bounds(&self) -> Vec<f64> {
        let cols = self.dataset.cols();
        let col_norm = |c: usize| cols.row(c).1.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.partition
            .groups()
            .iter()
            .map(|g| match self.reg {
                Regularizer::L1 => g.iter().map(|&c| col_norm(c)).fold(0.0, f64::max),
                Regularizer::GroupL2 if g.len() == 1 => col_norm(g[0]),
                Regularizer::GroupL2 if g.len() <= EXACT_SPECTRAL_MAX => spectral_norm(cols, g),
                // Frobenius norm: a cheap upper bound, so screening stays safe
                Regularizer::GroupL2 => g.iter().map(|&c| col_norm(c).powi(2)).sum::<f64>().sqrt(),
            })
            .collect()
    }
}

fn sparse_dot(a: (&[usize], &[f64]), b: (&[usize], &[f64])) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.0.len() && j < b.0.len() {
        match a.0[i].cmp(&b.0[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a.1[i] * b.1[j];
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn spectral_norm(cols: &crate::sparse::CsrMatrix, group: &[usize]) -> f64 {
    let k = group.len();
    let gram = DMatrix::from_fn(k, k, |r, c| {
        sparse_dot(cols.row(group[r]), cols.row(group[c]))
    });
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_spec(loss: LossKind, y: Vec<f64>, rows: Vec<Vec<f64>>) -> ProblemSpec {
        let d = rows[0].len();
        let ds = Arc::new(Dataset::from_dense(&rows, y).unwrap());
        ProblemSpec::new(
            ds,
            BlockPartition::singletons(d).unwrap(),
            loss,
            Regularizer::L1,
            1.0,
        )
        .unwrap()
    }

    fn two_by_two() -> ProblemSpec {
        hand_spec(
            LossKind::SquaredError,
            vec![1.0, -1.0],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
    }

    #[test]
    fn objective_at_zero() {
        let s = two_by_two();
        assert_eq!(s.primal_objective(&[0.0, 0.0]).unwrap(), 0.5);
        let lg = hand_spec(
            LossKind::Logistic,
            vec![0.0, 0.0],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        );
        assert!((lg.primal_objective(&[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_zero() {
        assert_eq!(
            two_by_two().full_gradient(&[0.0, 0.0]).unwrap(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = two_by_two();
        assert!(matches!(
            s.primal_objective(&[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(s.full_gradient(&[0.0; 3]).is_err());
        assert!(s.partial_gradient(&[0.0, 0.0], &[], 0).is_err());
        assert!(s.partial_gradient(&[0.0, 0.0], &[0], 2).is_err());
    }

    #[test]
    fn singleton_partial_gradient() {
        let s = two_by_two();
        let x = [0.5, -0.25];
        let g = s.partial_gradient(&x, &[1], 1).unwrap();
        let z = 3.0 * 0.5 + 4.0 * -0.25;
        assert_eq!(g, vec![4.0 * (z - -1.0)]);
    }

    #[test]
    fn lipschitz_hand_values() {
        let sq = hand_spec(LossKind::SquaredError, vec![1.0], vec![vec![3.0, 4.0]]);
        let c = sq.lipschitz_constants().unwrap();
        assert_eq!((c.l, c.t), (16.0, 25.0));
        let lg = hand_spec(LossKind::Logistic, vec![1.0], vec![vec![3.0, 4.0]]);
        let c = lg.lipschitz_constants().unwrap();
        assert_eq!((c.l, c.t), (4.0, 6.25));
        let p = sq.with_perturbation(0.5, vec![0.0; 2]).unwrap();
        let c = p.lipschitz_constants().unwrap();
        assert_eq!((c.l, c.t), (17.0, 26.0));
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let s = hand_spec(LossKind::SquaredError, vec![1.0], vec![vec![0.0, 0.0]]);
        assert!(matches!(
            s.lipschitz_constants(),
            Err(Error::DegenerateProblem(_))
        ));
    }

    #[test]
    fn lambda_max_hand_values() {
        assert_eq!(two_by_two().lambda_max().unwrap(), 1.0);
        let zero_y = hand_spec(
            LossKind::SquaredError,
            vec![0.0, 0.0],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        );
        assert_eq!(zero_y.lambda_max().unwrap(), 0.0);
        let lg = hand_spec(
            LossKind::Logistic,
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        assert_eq!(lg.lambda_max().unwrap(), 0.25);
    }

    #[test]
    fn invalid_construction() {
        let ds = Arc::new(Dataset::from_dense(&[vec![1.0]], vec![0.5]).unwrap());
        let p = BlockPartition::singletons(1).unwrap();
        assert!(ProblemSpec::new(
            ds.clone(),
            p.clone(),
            LossKind::Logistic,
            Regularizer::L1,
            1.0
        )
        .is_err());
        assert!(ProblemSpec::new(
            ds.clone(),
            p.clone(),
            LossKind::SquaredError,
            Regularizer::L1,
            0.0
        )
        .is_err());
        let s = ProblemSpec::new(ds, p, LossKind::SquaredError, Regularizer::L1, 1.0).unwrap();
        assert!(s.clone().with_perturbation(-1.0, vec![0.0]).is_err());
        assert!(s.with_perturbation(1.0, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn group_column_bound_is_spectral_norm() {
        // columns (1,0) and (1,1): Gram [[1,1],[1,2]], top eigenvalue (3+√5)/2
        let ds = Arc::new(
            Dataset::from_dense(&[vec![1.0, 1.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap(),
        );
        let p = BlockPartition::contiguous(2, 1).unwrap();
        let s = ProblemSpec::new(
            ds.clone(),
            p.clone(),
            LossKind::SquaredError,
            Regularizer::GroupL2,
            1.0,
        )
        .unwrap();
        let expected = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((s.column_bounds()[0] - expected).abs() < 1e-12);
        let l1 = ProblemSpec::new(ds, p, LossKind::SquaredError, Regularizer::L1, 1.0).unwrap();
        assert!((l1.column_bounds()[0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
