//! Basic sequences in ℓ_p with a prescribed pattern of zero coordinates.
//!
//! [`construct_lemma_a`] builds a normalized basic sequence `f_k` whose
//! coordinates at an increasing index list `s_k` are triangular and strongly
//! dominated, together with a block sequence `g_k` close to it.
//! [`construct_lemma_b`] then corrects each `f_k` into `l_k` with
//! `l_k(s_j) = 0` for every `j ≠ k`.

pub mod lemma_a;
pub mod lemma_b;
pub mod perturb;
pub mod projection;

pub use lemma_a::{construct_lemma_a, LemmaACert, LemmaAOptions};
pub use lemma_b::{construct_lemma_b, LemmaBCert};
pub use perturb::{perturbation_bounds, small_perturbation_cert, PerturbCert};
pub use projection::{BiorthogonalProjection, ProjectionOp};

use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::seq::AmbientSpace;

/// `0 < eps < bound`, compared exactly against the binary value of `eps`.
pub(crate) fn check_eps(eps: f64, bound: &Rational, what: &str) -> Result<()> {
    let ok = eps.is_finite() && eps > 0.0 && Rational::from_float(eps).is_some_and(|e| &e < bound);
    if ok {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange(format!(
            "eps must satisfy 0 < eps < {what}, got {eps}"
        )))
    }
}

pub(crate) fn require_lp(space: &AmbientSpace) -> Result<f64> {
    space
        .exponent()
        .ok_or_else(|| Error::Config(format!("expected an l_p space, got {}", space.name())))
}
