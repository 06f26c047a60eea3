use serde::{Deserialize, Serialize};

/// Block-separable norm `Ω(x) = Σ_j Ω_j(x_{G_j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    /// Sum of absolute values inside each block. Dual norm is the max-abs.
    L1,
    /// Euclidean norm of each block (group Lasso). Self-dual.
    GroupL2,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl Regularizer {
    pub fn value(self, v: &[f64]) -> f64 {
        match self {
            Regularizer::L1 => v.iter().map(|a| a.abs()).sum(),
            Regularizer::GroupL2 => l2(v),
        }
    }

    pub fn dual_norm(self, v: &[f64]) -> f64 {
        match self {
            Regularizer::L1 => v.iter().fold(0.0, |m, a| m.max(a.abs())),
            Regularizer::GroupL2 => l2(v),
        }
    }

    /// In-place `argmin_p ½‖v − p‖² + threshold·Ω_j(p)`, i.e. the block prox with
    /// `threshold = η λ`.
    pub fn prox_in_place(self, v: &mut [f64], threshold: f64) {
        match self {
            Regularizer::L1 => {
                for a in v.iter_mut() {
                    *a = soft_threshold(*a, threshold);
                }
            }
            Regularizer::GroupL2 => {
                let norm = l2(v);
                let scale = if norm <= threshold {
                    0.0
                } else {
                    1.0 - threshold / norm
                };
                for a in v.iter_mut() {
                    *a *= scale;
                }
            }
        }
    }
}

#[inline]
pub fn soft_threshold(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::collection::vec;
    use proptest::prelude::*;

    fn reg(l1: bool) -> Regularizer {
        if l1 {
            Regularizer::L1
        } else {
            Regularizer::GroupL2
        }
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn group_prox_shrinks_norm() {
        let mut v = [3.0, 4.0];
        Regularizer::GroupL2.prox_in_place(&mut v, 1.0);
        assert!((v[0] - 2.4).abs() < 1e-15 && (v[1] - 3.2).abs() < 1e-15);
        let mut w = [0.3, 0.4];
        Regularizer::GroupL2.prox_in_place(&mut w, 1.0);
        assert_eq!(w, [0.0, 0.0]);
    }

    proptest! {
        // Ω(v) = max over the dual unit ball of ⟨u, v⟩. The maximiser is
        // attained at a vertex (L1) or the normalised vector (L2); a random
        // sweep over the dual ball must never exceed it.
        #[test]
        fn norm_is_support_function_of_dual_ball(
            v in vec(-5.0f64..5.0, 1..6),
            probes in vec(vec(-1.0f64..1.0, 6), 64),
            l1 in any::<bool>(),
        ) {
            let r = reg(l1);
            let omega = r.value(&v);
            let mut best: f64 = 0.0;
            for p in &probes {
                let u = &p[..v.len()];
                let dn = r.dual_norm(u);
                if dn == 0.0 { continue; }
                let inner: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / dn;
                prop_assert!(inner <= omega + 1e-12);
                best = best.max(inner);
            }
            let argmax: Vec<f64> = match r {
                Regularizer::L1 => v.iter().map(|a| a.signum()).collect(),
                Regularizer::GroupL2 => {
                    let n = r.value(&v).max(1e-300);
                    v.iter().map(|a| a / n).collect()
                }
            };
            prop_assert!(r.dual_norm(&argmax) <= 1.0 + 1e-12);
            let attained: f64 = argmax.iter().zip(&v).map(|(a, b)| a * b).sum();
            prop_assert!((attained - omega).abs() <= 1e-9 * (1.0 + omega));
        }

        // (v − p)/η ∈ λ ∂Ω(p) with threshold = ηλ.
        #[test]
        fn prox_satisfies_subgradient_condition(
            v in vec(-5.0f64..5.0, 1..6),
            t in 0.01f64..3.0,
            l1 in any::<bool>(),
        ) {
            let r = reg(l1);
            let mut p = v.clone();
            r.prox_in_place(&mut p, t);
            let g: Vec<f64> = v.iter().zip(&p).map(|(a, b)| (a - b) / t).collect();
            match r {
                Regularizer::L1 => {
                    for (gi, pi) in g.iter().zip(&p) {
                        if *pi != 0.0 {
                            prop_assert!((gi - pi.signum()).abs() < 1e-9);
                        } else {
                            prop_assert!(gi.abs() <= 1.0 + 1e-12);
                        }
                    }
                }
                Regularizer::GroupL2 => {
                    let np = r.value(&p);
                    if np > 0.0 {
                        for (gi, pi) in g.iter().zip(&p) {
                            prop_assert!((gi - pi / np).abs() < 1e-9);
                        }
                    } else {
                        prop_assert!(r.dual_norm(&g) <= 1.0 + 1e-12);
                    }
                }
            }
        }
    }
}
