//! Experiment plans, read from a small TOML key-value file:
//!
//! ```toml
//! synthetic = "100,200,0.3,0.1"   # or: data = "path/to/file.libsvm"
//! model = "lasso"
//! lambda_ratios = [0.5, 0.25]
//! solvers = ["adsgd", "mrbcd", "proxsvrg"]
//! repetitions = 3
//! seed = 0
//! output = "runs/demo"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::synthetic::SyntheticParams;
use crate::error::{Error, Result};
use crate::problem::{LossKind, Regularizer};
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub source: DataSource,
    pub model: LossKind,
    pub regularizer: Regularizer,
    /// Number of contiguous blocks (capped at `d`).
    pub blocks: usize,
    pub mu_p: f64,
    pub lambda_ratios: Vec<f64>,
    /// One config per solver; repetition `r` runs with `seed + r`.
    pub solvers: Vec<SolverConfig>,
    pub repetitions: usize,
    pub output: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    data: Option<PathBuf>,
    synthetic: Option<String>,
    data_seed: Option<u64>,
    model: String,
    regularizer: Option<Regularizer>,
    blocks: Option<usize>,
    mu_p: Option<f64>,
    lambda_ratios: Option<Vec<f64>>,
    solvers: Vec<String>,
    repetitions: Option<usize>,
    seed: Option<u64>,
    output: PathBuf,
    svg: Option<bool>,
    batch_size: Option<usize>,
    inner_m: Option<usize>,
    eta: Option<f64>,
    theory_mode: Option<bool>,
    gap_tol: Option<f64>,
    max_outer: Option<usize>,
}

impl ExperimentPlan {
    /// Relative data and output paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let f: PlanFile =
            toml::from_str(text).map_err(|e| Error::invalid(format!("plan file: {e}")))?;
        let source = match (f.data, f.synthetic) {
            (Some(p), None) => DataSource::File(base_dir.join(p)),
            (None, Some(s)) => {
                DataSource::Synthetic(SyntheticParams::parse(&s, f.data_seed.unwrap_or(0))?)
            }
            _ => {
                return Err(Error::invalid(
                    "plan needs exactly one of 'data' or 'synthetic'",
                ))
            }
        };
        let mut base = SolverConfig::default();
        if let Some(b) = f.batch_size {
            base.batch_size = b;
        }
        base.inner_m = f.inner_m;
        base.eta = f.eta;
        base.theory_mode = f.theory_mode.unwrap_or(false);
        if let Some(t) = f.gap_tol {
            base.gap_tol = t;
        }
        if let Some(k) = f.max_outer {
            base.max_outer = k;
        }
        base.seed = f.seed.unwrap_or(0);
        let solvers = f
            .solvers
            .iter()
            .map(|s| {
                Ok(SolverConfig {
                    solver: s.parse::<SolverKind>()?,
                    ..base.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = Self {
            source,
            model: f.model.parse()?,
            regularizer: f.regularizer.unwrap_or(Regularizer::L1),
            blocks: f.blocks.unwrap_or(10),
            mu_p: f.mu_p.unwrap_or(0.0),
            lambda_ratios: f.lambda_ratios.unwrap_or_else(|| vec![0.5, 0.25]),
            solvers,
            repetitions: f.repetitions.unwrap_or(1),
            output: base_dir.join(f.output),
            svg: f.svg.unwrap_or(true),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_ratios.is_empty() {
            return Err(Error::invalid("lambda_ratios is empty"));
        }
        if let Some(r) = self
            .lambda_ratios
            .iter()
            .find(|r| !(**r > 0.0 && **r <= 1.0))
        {
            return Err(Error::invalid(format!("lambda ratio {r} outside (0, 1]")));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(Error::invalid("no solvers listed"));
        }
        if self.blocks == 0 {
            return Err(Error::invalid("blocks must be at least 1"));
        }
        if !(self.mu_p >= 0.0 && self.mu_p.is_finite()) {
            return Err(Error::invalid(format!(
                "mu_p must be nonnegative, got {}",
                self.mu_p
            )));
        }
        for s in &self.solvers {
            s.validate()?;
        }
        Ok(())
    }
}
