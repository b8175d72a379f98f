//! `[l_{s_2}, l_{s_4}, …]` is complemented: compose the projection `R` onto
//! `[l_{s_1}, l_{s_2}, …]` with the map keeping the even coordinates in the
//! `l` basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::lp_construction::{BiorthogonalProjection, LemmaBCert};
use crate::sampling::{norm_f64, operator_norm_lower_bound, rng, uniform_coeffs};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub samples: usize,
    pub seed: u64,
    /// Certified bound on the projection onto the span of the perturbed
    /// family, from the small-perturbation certificate.
    pub q_norm_bound: f64,
    /// Sampled lower bound for `|R|`.
    pub r_norm_lower: f64,
    /// Sampled lower bound for the even split.
    pub split_norm_lower: f64,
    /// `max |E(E x) − E x| / max(1, |E x|)` over sampled `x`.
    pub idempotency_residual: f64,
    /// `max_k |E l_{s_{2k}} − l_{s_{2k}}|`.
    pub fixed_point_residual: f64,
    /// `max_k |E l_{s_{2k−1}}|`.
    pub annihilation_residual: f64,
    pub ledger: Ledger,
}

fn rows<S: Scalar>(cert: &LemmaBCert<S>) -> Vec<Vec<f64>> {
    cert.l
        .iter()
        .map(|x| x.coords().iter().map(Scalar::to_f64).collect())
        .collect()
}

fn diff_norm(a: &[f64], b: &[f64], space: &crate::seq::AmbientSpace) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_f64(&d, space)
}

/// Projection `R` onto the `l` span along the kernel of the Lemma A block
/// functionals, and the even split `E = (keep even) ∘ R`.
pub fn complement_split<S: Scalar>(cert: &LemmaBCert<S>, samples: usize, seed: u64) -> Result<SplitReport> {
    let q_norm_bound = match cert.perturb_q.q_norm_bound {
        Some(b) if cert.perturb_q.ok && cert.perturb_unit.ok => b,
        _ => return Err(Error::MissingPerturbCert),
    };
    let r = BiorthogonalProjection::new(&cert.lemma_a.projection()?, &cert.l, cert.eta)?;
    let split = |x: &[f64]| r.combine(&r.coefficients(x), |k| k % 2 == 1);
    let space = cert.space;
    let eta = cert.eta;
    let l = rows(cert);
    let len = l.first().map_or(0, Vec::len);

    let mut fixed: f64 = 0.0;
    let mut annihilated: f64 = 0.0;
    for (k, lk) in l.iter().enumerate() {
        let e = split(lk);
        if k % 2 == 1 {
            fixed = fixed.max(diff_norm(&e, lk, &space));
        } else {
            annihilated = annihilated.max(norm_f64(&e, &space));
        }
    }

    let mut rg = rng(seed, 4);
    let mut idem: f64 = 0.0;
    for i in 0..samples {
        // Alternate vectors of the span with arbitrary ambient vectors.
        let x = if i % 2 == 0 {
            let a = uniform_coeffs(&mut rg, l.len());
            r.combine(&a, |_| true)
        } else {
            uniform_coeffs(&mut rg, len)
        };
        let e = split(&x);
        let ee = split(&e);
        idem = idem.max(diff_norm(&ee, &e, &space) / norm_f64(&e, &space).max(1.0));
    }
    let r_norm_lower = r.norm_lower(samples, seed);
    let split_norm_lower = operator_norm_lower_bound(split, len, &l, &space, samples, seed);

    let mut ledger = Ledger::new();
    ledger.push_flag("perturbation_certified", &[], cert.perturb_q.ok && cert.perturb_unit.ok);
    ledger.push("fixed_points", &[], fixed, Relation::Le, eta, 0.0);
    ledger.push("odd_annihilated", &[], annihilated, Relation::Le, eta, 0.0);
    ledger.push("idempotent", &[], idem, Relation::Le, eta, 0.0);
    ledger.push("r_norm_sampled", &[], r_norm_lower, Relation::Le, q_norm_bound, eta);
    Ok(SplitReport {
        samples,
        seed,
        q_norm_bound,
        r_norm_lower,
        split_norm_lower,
        idempotency_residual: idem,
        fixed_point_residual: fixed,
        annihilation_residual: annihilated,
        ledger,
    })
}
