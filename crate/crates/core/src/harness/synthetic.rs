use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{sigmoid, LossKind};
use crate::sparse::{CsrMatrix, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub d: usize,
    /// Fraction of nonzero design entries, in `(0, 1]`.
    pub sparsity: f64,
    /// Standard deviation of the additive response noise (regression only).
    pub noise: f64,
    /// Nonzeros in the planted coefficient vector; `None` picks `max(1, d/20)`.
    pub support: Option<usize>,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn new(n: usize, d: usize, sparsity: f64, noise: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            sparsity,
            noise,
            support: None,
            seed,
        }
    }

    /// Parses `"n,d,sparsity,noise"`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let [n, d, sparsity, noise] = parts[..] else {
            return Err(Error::invalid(format!(
                "expected n,d,sparsity,noise, got '{text}'"
            )));
        };
        let bad = |what: &str, v: &str| Error::invalid(format!("bad {what} '{v}' in '{text}'"));
        let params = Self::new(
            n.parse().map_err(|_| bad("n", n))?,
            d.parse().map_err(|_| bad("d", d))?,
            sparsity.parse().map_err(|_| bad("sparsity", sparsity))?,
            noise.parse().map_err(|_| bad("noise", noise))?,
            seed,
        );
        params.validate()?;
        Ok(params)
    }

    pub fn with_support(mut self, k: usize) -> Self {
        self.support = Some(k);
        self
    }

    fn validate(&self) -> Result<usize> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("n and d must be at least 1"));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::invalid(format!(
                "sparsity must lie in (0, 1], got {}",
                self.sparsity
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!(
                "noise must be nonnegative, got {}",
                self.noise
            )));
        }
        let k = self.support.unwrap_or((self.d / 20).max(1));
        if k > self.d {
            return Err(Error::invalid(format!(
                "support {k} exceeds d = {}",
                self.d
            )));
        }
        Ok(k)
    }
}

/// A generated dataset together with the planted coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub planted: Vec<f64>,
}

fn planted_vector(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for c in sample(rng, d, k) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x[c] = sign * rng.random_range(0.5..1.5);
    }
    x
}

fn responses(rng: &mut ChaCha8Rng, model: LossKind, margins: &[f64], noise: f64) -> Vec<f64> {
    match model {
        LossKind::SquaredError => margins
            .iter()
            .map(|&z| {
                let eps: f64 = rng.sample(StandardNormal);
                z + noise * eps
            })
            .collect(),
        LossKind::Logistic => margins
            .iter()
            .map(|&z| {
                let p = Bernoulli::new(sigmoid(z)).expect("sigmoid lies in [0, 1]");
                f64::from(u8::from(p.sample(rng)))
            })
            .collect(),
    }
}

/// Seeded sparse Gaussian design with a planted `k`-sparse linear model.
pub fn generate_synthetic(params: &SyntheticParams, model: LossKind) -> Result<Synthetic> {
    let k = params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut triplets = Vec::new();
    for i in 0..params.n {
        for j in 0..params.d {
            if params.sparsity >= 1.0 || rng.random_bool(params.sparsity) {
                let v: f64 = rng.sample(StandardNormal);
                triplets.push((i, j, v));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(params.n, params.d, &triplets)?;
    let planted = planted_vector(&mut rng, params.d, k);
    let margins = matrix.mul_vec(&planted);
    let y = responses(&mut rng, model, &margins, params.noise);
    Ok(Synthetic {
        dataset: Dataset::new(matrix, y)?,
        planted,
    })
}

/// Dense design with `AᵀA = n·I` (orthonormalised Gaussian columns scaled by
/// `√n`), so the Lasso solution is a coordinate-wise soft threshold.
pub fn generate_orthonormal(params: &SyntheticParams) -> Result<Synthetic> {
    let k = params.validate()?;
    let (n, d) = (params.n, params.d);
    if d > n {
        return Err(Error::invalid(format!(
            "orthonormal design needs d <= n, got d = {d}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // modified Gram-Schmidt, twice for stability
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
    }
    let scale = (n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| cols.iter().map(|c| c[i] * scale).collect())
        .collect();
    let matrix = CsrMatrix::from_dense(&rows)?;
    let planted = planted_vector(&mut rng, d, k);
    let margins = matrix.mul_vec(&planted);
    let y = responses(&mut rng, LossKind::SquaredError, &margins, params.noise);
    Ok(Synthetic {
        dataset: Dataset::new(matrix, y)?,
        planted,
    })
}
