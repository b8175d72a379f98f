//! Correcting `f_k` into `l_k` with `l_k(s_j) = 0` for `j ≠ k`.
//!
//! `l_{0,k} = f_k` and `l_{t,k} = l_{t−1,k} − c_{k,t} f_{k+t}` with `c_{k,t}`
//! chosen to zero `s_{k+t}`. Since `f_{k+t}` vanishes at `s_1, …, s_{k+t−1}`,
//! earlier zeros survive. The recursion stops when the constructed indices
//! run out.

use serde::{Deserialize, Serialize};

use super::lemma_a::{construct_lemma_a, perturb_close, LemmaACert, LemmaAOptions};
use super::perturb::{small_perturbation_cert, PerturbCert};
use super::{check_eps, require_lp};
use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::scalar::{rational, Scalar};
use crate::seq::{full_norm, AmbientSpace, Seq};
use crate::subspace::Subspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LemmaBCert<S: Scalar> {
    pub space: AmbientSpace,
    pub eps: f64,
    pub eta: f64,
    pub s: Vec<usize>,
    pub l: Vec<Seq<S>>,
    /// `c_{k,t}` for `t = 1..=D−k`.
    #[serde(with = "crate::scalar::serde_matrix")]
    pub coeffs: Vec<Vec<S>>,
    /// `|l_k − f_k|`.
    pub residuals: Vec<f64>,
    /// Number of correction steps applied to each `l_k`.
    pub iteration_depth: Vec<usize>,
    pub delta: f64,
    /// `K` = certified basis constant of `(f_k)` and `|P| = 1`.
    pub perturb_unit: PerturbCert,
    /// Same `K`, with `|P|` replaced by the certified bound on `|Q|`.
    pub perturb_q: PerturbCert,
    pub lemma_a: LemmaACert<S>,
    pub ledger: Ledger,
}

fn pow2(k: usize) -> f64 {
    2f64.powi(k as i32)
}

/// Runs the lower construction with the same options and corrects its
/// output. Requires `eps < 1/512`.
pub fn construct_lemma_b<S: Scalar>(v: &Subspace<S>, opts: &LemmaAOptions<S>) -> Result<LemmaBCert<S>> {
    check_eps(opts.eps, &rational(1, 512), "1/512")?;
    require_lp(&v.space())?;
    let a = construct_lemma_a(v, opts)?;
    let d = a.depth();
    let mut l = Vec::with_capacity(d);
    let mut coeffs = Vec::with_capacity(d);
    for k in 0..d {
        let mut lk = a.f[k].clone();
        let mut ck = Vec::with_capacity(d - k - 1);
        for u in k + 1..d {
            let at = a.s[u];
            let c = lk.at(at).clone() / a.f[u].at(at).clone();
            lk = lk.axpy(&-c.clone(), &a.f[u])?;
            lk.set(at, S::zero());
            ck.push(c);
        }
        l.push(lk);
        coeffs.push(ck);
    }
    let mut cert = LemmaBCert {
        space: a.space,
        eps: a.eps,
        eta: a.eta,
        s: a.s.clone(),
        iteration_depth: coeffs.iter().map(Vec::len).collect(),
        residuals: Vec::new(),
        delta: 0.0,
        perturb_unit: a.perturb.clone(),
        perturb_q: a.perturb.clone(),
        l,
        coeffs,
        lemma_a: a,
        ledger: Ledger::new(),
    };
    cert.residuals = cert
        .l
        .iter()
        .zip(&cert.lemma_a.f)
        .map(|(lk, fk)| full_norm(&lk.sub(fk)?, &cert.space))
        .collect::<Result<_>>()?;
    let (unit, q) = cert.perturbations()?;
    cert.delta = unit.delta;
    cert.perturb_unit = unit;
    cert.perturb_q = q;
    cert.ledger = cert.audit()?;
    Ok(cert)
}

impl<S: Scalar> LemmaBCert<S> {
    pub fn depth(&self) -> usize {
        self.l.len()
    }

    fn perturbations(&self) -> Result<(PerturbCert, PerturbCert)> {
        let a = &self.lemma_a;
        let k = a.perturb.basis_constant_bound.unwrap_or(f64::INFINITY);
        let q = a.perturb.q_norm_bound.unwrap_or(f64::INFINITY);
        // An unusable K is reported through `ok = false` rather than an error.
        let k = if k.is_finite() { k.max(1.0) } else { f64::MAX };
        let unit = small_perturbation_cert(&a.f, &self.l, k, 1.0, &self.space)?;
        let with_q = small_perturbation_cert(&a.f, &self.l, k, q, &self.space)?;
        Ok((unit, with_q))
    }

    /// `l_{0,k}, …, l_{t,k}` rebuilt from `f` and the stored coefficients.
    pub fn iterates(&self, k: usize) -> Result<Vec<Seq<S>>> {
        let f = &self.lemma_a.f;
        let mut out = vec![f[k].clone()];
        for (t, c) in self.coeffs[k].iter().enumerate() {
            let prev = &out[t];
            out.push(prev.axpy(&-c.clone(), &f[k + 1 + t])?);
        }
        Ok(out)
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.l.len();
        let a = &self.lemma_a;
        let bad = d == 0
            || a.depth() != d
            || self.s != a.s
            || self.coeffs.len() != d
            || self.residuals.len() != d
            || self.iteration_depth.len() != d
            || self.coeffs.iter().enumerate().any(|(k, c)| c.len() != d - k - 1)
            || self.l.iter().any(|x| x.len() != a.f[0].len())
            || self.space != a.space
            || self.eps != a.eps;
        if bad {
            return Err(Error::MalformedCertificate("lemma B fields are inconsistent".into()));
        }
        Ok(())
    }

    /// Recomputes every claim from `f`, `l` and the coefficients.
    pub fn audit(&self) -> Result<Ledger> {
        self.check_shape()?;
        let a = &self.lemma_a;
        let space = self.space;
        let eps = self.eps;
        let eta = self.eta;
        let d = self.depth();
        let mut led = Ledger::new();

        for k in 0..d {
            for j in (0..d).filter(|&j| j != k) {
                let v = self.l[k].at(self.s[j]).to_f64().abs();
                led.push("l_zero", &[k + 1, j + 1], v, Relation::Le, eta, 0.0);
            }
        }
        for k in 0..d {
            let at = self.s[k];
            let lk = self.l[k].at(at);
            led.push_decided(
                "l_diag",
                &[k + 1],
                lk.to_f64().abs(),
                Relation::Gt,
                eta,
                !lk.is_negligible(eta),
            );
            let shift = (lk.clone() - a.f[k].at(at).clone()).to_f64().abs();
            led.push("l_diag_preserved", &[k + 1], shift, Relation::Le, eta, 0.0);
        }

        let eps_ok = check_eps(eps, &rational(1, 512), "1/512").is_ok();
        led.push_decided("eps_range", &[], eps, Relation::Lt, 1.0 / 512.0, eps_ok);
        led.push("eps_product", &[], 512.0 * eps, Relation::Lt, 1.0, 0.0);

        for k in 0..d {
            let kk = k + 1;
            let it = self.iterates(k)?;
            led.push_flag("iteration_depth", &[kk], self.iteration_depth[k] == d - kk);
            let last = it.last().expect("l_{0,k} is always present");
            let gap = self.l[k]
                .sub(last)?
                .coords()
                .iter()
                .map(|x| x.to_f64().abs())
                .fold(0.0, f64::max);
            led.push("l_reconstruction", &[kk], gap, Relation::Le, eta, 0.0);
            for t in 1..it.len() {
                let zeroed = it[t].at(self.s[k + t]).to_f64().abs();
                led.push("iterate_zero", &[kk, t], zeroed, Relation::Le, eta, 0.0);
                let step = full_norm(&it[t].sub(&it[t - 1])?, &space)?;
                led.push("step_norm", &[kk, t], step, Relation::Lt, eps / pow2(kk + t), 0.0);
            }
            for m in 0..it.len() {
                for t in m + 1..it.len() {
                    let gap = full_norm(&it[t].sub(&it[m])?, &space)?;
                    led.push("contraction", &[kk, m, t], gap, Relation::Le, eps / pow2(kk + m), eta);
                }
            }
            let resid = full_norm(&self.l[k].sub(&a.f[k])?, &space)?;
            led.push("residual", &[kk], resid, Relation::Le, eps / pow2(kk), eta);
            led.push(
                "residual_recorded",
                &[kk],
                (resid - self.residuals[k]).abs(),
                Relation::Le,
                0.0,
                eta,
            );
        }

        let (unit, q) = self.perturbations()?;
        led.push("delta_b", &[], unit.delta, Relation::Le, eps, eta);
        led.push(
            "delta_recorded",
            &[],
            (unit.delta - self.delta).abs(),
            Relation::Le,
            0.0,
            eta * (1.0 + self.delta),
        );
        led.push(
            "perturbation_unit_p",
            &[],
            8.0 * unit.k * unit.delta * unit.p_norm,
            Relation::Lt,
            1.0,
            0.0,
        );
        let product = 8.0 * q.k * q.delta * q.p_norm;
        led.push("perturbation_q", &[], product, Relation::Lt, 1.0, 0.0);
        led.push("perturbation_q_512", &[], product, Relation::Le, 512.0 * eps, eta);
        led.push_flag(
            "perturb_matches",
            &[],
            perturb_close(&unit, &self.perturb_unit, eta) && perturb_close(&q, &self.perturb_q, eta),
        );

        led.extend(a.audit()?);
        Ok(led)
    }
}
