use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Per-sample loss `f_i(z)` with `z = a_iᵀx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `½ (y − z)²`
    #[serde(rename = "lasso", alias = "squared")]
    SquaredError,
    /// `log(1 + eᶻ) − y z` with `y ∈ {0, 1}`
    Logistic,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lasso" | "squared" => Ok(LossKind::SquaredError),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::invalid(format!(
                "unknown model '{other}' (expected lasso or logistic)"
            ))),
        }
    }
}

// slack for conjugate-domain membership after rescaling
const DOMAIN_SLACK: f64 = 1e-12;

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn xlogx(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

impl LossKind {
    /// Model name used on the command line and in plan files.
    pub fn name(self) -> &'static str {
        match self {
            LossKind::SquaredError => "lasso",
            LossKind::Logistic => "logistic",
        }
    }

    #[inline]
    pub fn value(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::SquaredError => 0.5 * (y - z) * (y - z),
            LossKind::Logistic => softplus(z) - y * z,
        }
    }

    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::SquaredError => z - y,
            LossKind::Logistic => sigmoid(z) - y,
        }
    }

    /// Convex conjugate `f*(u) = sup_z u z − f(z)`; `+∞` outside its domain.
    #[inline]
    pub fn conjugate(self, u: f64, y: f64) -> f64 {
        match self {
            LossKind::SquaredError => 0.5 * u * u + u * y,
            LossKind::Logistic => {
                let v = u + y;
                if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&v) {
                    return f64::INFINITY;
                }
                let v = v.clamp(0.0, 1.0);
                xlogx(v) + xlogx(1.0 - v)
            }
        }
    }

    /// Lipschitz constant of `f′`.
    pub fn curvature(self) -> f64 {
        match self {
            LossKind::SquaredError => 1.0,
            LossKind::Logistic => 0.25,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn model_names_round_trip() {
        for k in [LossKind::SquaredError, LossKind::Logistic] {
            assert_eq!(k.name().parse::<LossKind>().unwrap(), k);
        }
        assert_eq!(
            "Squared".parse::<LossKind>().unwrap(),
            LossKind::SquaredError
        );
        assert!("hinge".parse::<LossKind>().is_err());
    }

    #[test]
    fn logistic_at_zero_is_log2() {
        assert!((LossKind::Logistic.value(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((LossKind::Logistic.value(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn logistic_conjugate_domain() {
        assert_eq!(LossKind::Logistic.conjugate(0.5, 1.0), f64::INFINITY);
        assert_eq!(LossKind::Logistic.conjugate(-1.5, 1.0), f64::INFINITY);
        assert_eq!(LossKind::Logistic.conjugate(-1.0, 1.0), 0.0);
        assert!((LossKind::Logistic.conjugate(-0.5, 1.0) + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        for z in [-800.0, 800.0] {
            for y in [0.0, 1.0] {
                assert!(LossKind::Logistic.value(z, y).is_finite());
                assert!(LossKind::Logistic.derivative(z, y).is_finite());
            }
        }
    }

    fn label(loss: LossKind, raw: f64) -> f64 {
        match loss {
            LossKind::SquaredError => raw,
            LossKind::Logistic => f64::from(raw > 0.0),
        }
    }

    proptest! {
        #[test]
        fn fenchel_young(z in -20.0f64..20.0, t in 0.0f64..1.0, raw in -3.0f64..3.0, sq in any::<bool>()) {
            let loss = if sq { LossKind::SquaredError } else { LossKind::Logistic };
            let y = label(loss, raw);
            let u = match loss {
                LossKind::SquaredError => 40.0 * t - 20.0,
                LossKind::Logistic => t - y,
            };
            prop_assert!(loss.value(z, y) + loss.conjugate(u, y) >= z * u - 1e-12);
        }

        #[test]
        fn fenchel_young_tight_at_derivative(z in -20.0f64..20.0, raw in -3.0f64..3.0, sq in any::<bool>()) {
            let loss = if sq { LossKind::SquaredError } else { LossKind::Logistic };
            let y = label(loss, raw);
            let u = loss.derivative(z, y);
            let lhs = loss.value(z, y) + loss.conjugate(u, y);
            prop_assert!((lhs - z * u).abs() < 1e-9 * (1.0 + z.abs()));
        }

        #[test]
        fn derivative_is_lipschitz(z1 in -30.0f64..30.0, z2 in -30.0f64..30.0, raw in -3.0f64..3.0, sq in any::<bool>()) {
            let loss = if sq { LossKind::SquaredError } else { LossKind::Logistic };
            let y = label(loss, raw);
            let diff = (loss.derivative(z1, y) - loss.derivative(z2, y)).abs();
            prop_assert!(diff <= loss.curvature() * (z1 - z2).abs() + 1e-14);
        }
    }
}
