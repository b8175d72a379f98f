//! Small-perturbation constants.
//!
//! If `(g_k)` is basic with constant `K`, `P` projects onto its span and
//! `δ = Σ |f_k − g_k|`, then `8Kδ|P| < 1` makes `(f_k)` equivalent to
//! `(g_k)` with a complemented span. The bounds below are the resulting
//! estimates on the comparison operator, the basis constant of `(f_k)` and
//! the projection onto its span.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seq::{full_norm, AmbientSpace, Seq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbCert {
    /// Basis constant of the base family.
    pub k: f64,
    /// Norm of the projection onto the base span.
    pub p_norm: f64,
    pub delta: f64,
    /// `8Kδ|P| < 1`.
    pub ok: bool,
    /// `1 + 2Kδ`.
    pub t_norm_bound: Option<f64>,
    /// `2 / (1 − 2Kδ)`.
    pub basis_constant_bound: Option<f64>,
    /// `2|P| / (1 − 8Kδ|P|)`, using `|T| <= 2`.
    pub q_norm_bound: Option<f64>,
    /// `(1 + 2Kδ)|P| / (1 − 8Kδ|P|)`.
    pub q_norm_bound_tight: Option<f64>,
}

/// Bounds from the three scalars alone.
pub fn perturbation_bounds(k: f64, p_norm: f64, delta: f64) -> PerturbCert {
    let product = 8.0 * k * delta * p_norm;
    let ok = product < 1.0 && k.is_finite() && p_norm.is_finite() && delta.is_finite();
    let when = |x: f64| ok.then_some(x);
    let t = 1.0 + 2.0 * k * delta;
    PerturbCert {
        k,
        p_norm,
        delta,
        ok,
        t_norm_bound: when(t),
        basis_constant_bound: when(2.0 / (1.0 - 2.0 * k * delta)),
        q_norm_bound: when(2.0 * p_norm / (1.0 - product)),
        q_norm_bound_tight: when(t * p_norm / (1.0 - product)),
    }
}

/// `δ = Σ_k |perturbed_k − base_k|` (discarded tails included) and the
/// bounds it implies.
pub fn small_perturbation_cert<S: Scalar>(
    base: &[Seq<S>],
    perturbed: &[Seq<S>],
    k: f64,
    p_norm: f64,
    space: &AmbientSpace,
) -> Result<PerturbCert> {
    if base.len() != perturbed.len() {
        return Err(Error::LengthMismatch {
            left: base.len(),
            right: perturbed.len(),
        });
    }
    if k < 1.0 {
        return Err(Error::Precondition(format!(
            "basis constant must be at least 1, got {k}"
        )));
    }
    let mut delta = 0.0;
    for (b, q) in base.iter().zip(perturbed) {
        delta += full_norm(&q.sub(b)?, space)?;
    }
    Ok(perturbation_bounds(k, p_norm, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn identity_perturbation() {
        let f = vec![Seq::<f64>::unit(1, 3).unwrap(), Seq::unit(2, 3).unwrap()];
        let c = small_perturbation_cert(&f, &f, 1.0, 1.0, &AmbientSpace::Lp(2.0)).unwrap();
        assert!(c.ok);
        assert_eq!(c.t_norm_bound, Some(1.0));
        assert_eq!(c.q_norm_bound_tight, Some(1.0));
        assert_eq!(c.basis_constant_bound, Some(2.0));
    }

    #[test]
    fn closed_forms_in_eps() {
        for eps in [0.01, 0.05, 0.1] {
            let c = perturbation_bounds(1.0, 1.0, 4.0 * eps / (4.0 - eps));
            assert!(c.ok);
            assert!(rel(c.basis_constant_bound.unwrap(), (8.0 - 2.0 * eps) / (4.0 - 9.0 * eps)) < 1e-12);
            assert!(rel(c.q_norm_bound.unwrap(), (8.0 - 2.0 * eps) / (4.0 - 33.0 * eps)) < 1e-12);
        }
    }

    #[test]
    fn boundary_is_not_ok() {
        let c = perturbation_bounds(1.0, 1.0, 0.125);
        assert!(!c.ok);
        assert!(c.t_norm_bound.is_none() && c.q_norm_bound.is_none() && c.basis_constant_bound.is_none());
    }

    #[test]
    fn length_mismatch() {
        let f = vec![Seq::<f64>::unit(1, 3).unwrap()];
        assert!(matches!(
            small_perturbation_cert(&f, &[], 1.0, 1.0, &AmbientSpace::Lp(2.0)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn bounds_finite_exactly_when_ok(k in 1.0f64..4.0, p in 1.0f64..4.0, delta in 0.0f64..0.2) {
            let c = perturbation_bounds(k, p, delta);
            prop_assert_eq!(c.ok, 8.0 * k * delta * p < 1.0);
            if c.ok {
                for b in [c.t_norm_bound, c.basis_constant_bound, c.q_norm_bound, c.q_norm_bound_tight] {
                    prop_assert!(b.unwrap().is_finite());
                }
                prop_assert!(c.q_norm_bound_tight.unwrap() <= c.q_norm_bound.unwrap());
            }
        }

        #[test]
        fn comparison_bound_at_most_two(delta in 0.0f64..=0.125) {
            let c = perturbation_bounds(1.0, 1.0, delta);
            prop_assert!(1.0 + 2.0 * delta <= 2.0);
            if let Some(t) = c.t_norm_bound {
                prop_assert!(t <= 2.0);
            }
        }
    }
}
