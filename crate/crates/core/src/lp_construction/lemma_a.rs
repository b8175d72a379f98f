//! Normalized basic sequence with a triangular, dominated pattern at `s_k`.

use serde::{Deserialize, Serialize};

use super::perturb::{small_perturbation_cert, PerturbCert};
use super::projection::{BiorthogonalProjection, ProjectionOp};
use super::{check_eps, require_lp};
use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::sampling::{basis_constant_lower_bound, DEFAULT_TRIALS};
use crate::scalar::{rational, Scalar};
use crate::seq::{abs_sum, full_norm, norm, tail_norm, tail_profile, AmbientSpace, Seq};
use crate::subspace::Subspace;

/// Inputs besides the subspace.
#[derive(Debug, Clone)]
pub struct LemmaAOptions<S> {
    pub eps: f64,
    pub depth: usize,
    /// Starting vector; defaults to the first reduced basis vector.
    pub f1: Option<Seq<S>>,
    pub trials: usize,
    pub seed: u64,
}

impl<S> LemmaAOptions<S> {
    pub fn new(eps: f64, depth: usize) -> Self {
        LemmaAOptions {
            eps,
            depth,
            f1: None,
            trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }
}

/// Sampled lower bounds paired with the certified upper bounds in
/// [`PerturbCert`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimates {
    pub trials: usize,
    pub seed: u64,
    pub p_norm_lower: f64,
    pub q_norm_lower: f64,
    pub basis_constant_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LemmaACert<S: Scalar> {
    pub space: AmbientSpace,
    pub eps: f64,
    pub eta: f64,
    pub s: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub f: Vec<Seq<S>>,
    pub f_tilde: Vec<Seq<S>>,
    pub g: Vec<Seq<S>>,
    pub sigma: Vec<(usize, usize)>,
    pub delta: f64,
    pub perturb: PerturbCert,
    pub estimates: NormEstimates,
    pub ledger: Ledger,
}

fn pow2(k: usize) -> f64 {
    2f64.powi(k as i32)
}

fn first_index(
    range: impl Iterator<Item = usize>,
    mut pred: impl FnMut(usize) -> Result<bool>,
) -> Result<Option<usize>> {
    for n in range {
        if pred(n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Smallest `m` in `from..=T` with `tail_norm(x, m) < bound`.
fn first_small_tail<S: Scalar>(
    x: &Seq<S>,
    from: usize,
    bound: f64,
    space: &AmbientSpace,
    extra: impl Fn(usize) -> bool,
) -> Result<Option<usize>> {
    let profile = tail_profile(x, space);
    first_index(from..=x.len(), |m| {
        Ok(extra(m) && profile[m] < bound * (1.0 + 1e-9) && tail_norm(x, m, space)? < bound)
    })
}

/// Runs the construction to `depth` vectors and audits the result.
pub fn construct_lemma_a<S: Scalar>(v: &Subspace<S>, opts: &LemmaAOptions<S>) -> Result<LemmaACert<S>> {
    let eps = opts.eps;
    check_eps(eps, &rational(4, 33), "4/33")?;
    let space = v.space();
    require_lp(&space)?;
    if opts.depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let eta = v.eta();
    let t_max = v.truncation();
    let f1 = match &opts.f1 {
        Some(f) => {
            if f.len() != t_max {
                return Err(Error::LengthMismatch {
                    left: t_max,
                    right: f.len(),
                });
            }
            f.normalized(&space)?
        }
        None => v
            .basis()
            .first()
            .ok_or(Error::DimensionExhausted { prefix: 0, dim: 0 })?
            .normalized(&space)?,
    };

    let n1 = first_small_tail(&abs_sum(std::slice::from_ref(&f1))?, 1, eps / 4.0, &space, |m| {
        !f1.at(m).is_negligible(eta)
    })?
    .ok_or_else(|| {
        Error::SearchExhausted(format!(
            "no N_1 <= {t_max} with f_1(N_1) != 0 and tail norm below {}",
            eps / 4.0
        ))
    })?;

    let mut f = vec![f1];
    let mut s = vec![n1];
    let mut n = vec![n1];
    while f.len() < opts.depth {
        let t = f.len();
        let nt = n[t - 1];
        let next = v.vanish_on_prefix(nt)?;
        let acc = abs_sum(&f)?;
        let c = S::from_f64(eps / pow2(t + 1));
        let st = first_index(nt + 1..=t_max, |m| Ok(*acc.at(m) < c.clone() * next.at(m).abs()))?.ok_or_else(|| {
            Error::SearchExhausted(format!(
                "no s_{} in ({nt}, {t_max}] with |f_1(s)|+…+|f_{t}(s)| < eps/2^{} |f_{}(s)|",
                t + 1,
                t + 1,
                t + 1
            ))
        })?;
        f.push(next);
        let bound = eps / pow2(t + 2);
        let nt1 = first_small_tail(&abs_sum(&f)?, st + 1, bound, &space, |_| true)?.ok_or_else(|| {
            Error::SearchExhausted(format!(
                "no N_{} in ({st}, {t_max}] with tail norm of |f_1|+…+|f_{}| below {bound:e}",
                t + 1,
                t + 1
            ))
        })?;
        s.push(st);
        n.push(nt1);
    }

    let sigma: Vec<(usize, usize)> = (0..n.len())
        .map(|k| (if k == 0 { 1 } else { n[k - 1] + 1 }, n[k]))
        .collect();
    let f_tilde: Vec<Seq<S>> = f.iter().zip(&sigma).map(|(fk, &(lo, hi))| fk.window(lo, hi)).collect();
    let g = f_tilde
        .iter()
        .map(|x| x.normalized(&space))
        .collect::<Result<Vec<_>>>()?;
    let p = ProjectionOp::new(&g, &sigma, &space, eta)?;
    let perturb = small_perturbation_cert(&g, &f, 1.0, p.norm_upper(), &space)?;
    let estimates = estimate_norms(&p, &f, &space, eta, opts.trials, opts.seed)?;
    let mut cert = LemmaACert {
        space,
        eps,
        eta,
        s,
        n,
        f,
        f_tilde,
        g,
        sigma,
        delta: perturb.delta,
        perturb,
        estimates,
        ledger: Ledger::new(),
    };
    cert.ledger = cert.audit()?;
    Ok(cert)
}

fn estimate_norms<S: Scalar>(
    p: &ProjectionOp,
    f: &[Seq<S>],
    space: &AmbientSpace,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<NormEstimates> {
    let q = BiorthogonalProjection::new(p, f, eta)?;
    Ok(NormEstimates {
        trials,
        seed,
        p_norm_lower: p.norm_lower(trials, seed),
        q_norm_lower: q.norm_lower(trials, seed),
        basis_constant_lower: basis_constant_lower_bound(f, space, trials, seed),
    })
}

fn malformed(what: &str) -> Error {
    Error::MalformedCertificate(what.to_string())
}

impl<S: Scalar> LemmaACert<S> {
    pub fn depth(&self) -> usize {
        self.f.len()
    }

    /// Norm-one projection onto the span of the blocks `g_k`.
    pub fn projection(&self) -> Result<ProjectionOp> {
        ProjectionOp::new(&self.g, &self.sigma, &self.space, self.eta)
    }

    /// Projection onto the span of the `f_k` along the kernel of the block
    /// functionals.
    pub fn q_projection(&self) -> Result<BiorthogonalProjection> {
        BiorthogonalProjection::new(&self.projection()?, &self.f, self.eta)
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.f.len();
        if d == 0 {
            return Err(malformed("empty f"));
        }
        if [
            self.s.len(),
            self.n.len(),
            self.f_tilde.len(),
            self.g.len(),
            self.sigma.len(),
        ]
        .iter()
        .any(|&l| l != d)
        {
            return Err(malformed("lemma A lists differ in length"));
        }
        let t = self.f[0].len();
        let seqs = self.f.iter().chain(&self.f_tilde).chain(&self.g);
        if seqs.into_iter().any(|x| x.len() != t) {
            return Err(malformed("sequences differ in length"));
        }
        if self.s.iter().chain(&self.n).any(|&i| i == 0 || i > t) {
            return Err(malformed("index outside the truncation"));
        }
        if self.sigma.iter().any(|&(lo, hi)| lo == 0 || lo > hi || hi > t) {
            return Err(malformed("bad window"));
        }
        require_lp(&self.space)?;
        Ok(())
    }

    /// Recomputes every inequality from the stored coordinates.
    pub fn audit(&self) -> Result<Ledger> {
        self.check_shape()?;
        let space = self.space;
        let eps = self.eps;
        let eta = self.eta;
        let d = self.depth();
        let mut l = Ledger::new();

        // Zero pattern first.
        for k in 1..d {
            let prefix = self.n[k - 1];
            let worst = self.f[k].coords()[..prefix]
                .iter()
                .map(|x| x.to_f64().abs())
                .fold(0.0, f64::max);
            l.push("prefix_zero", &[k + 1], worst, Relation::Le, eta, 0.0);
            for j in 0..k {
                let v = self.f[k].at(self.s[j]).to_f64().abs();
                l.push("s_zero", &[k + 1, j + 1], v, Relation::Le, eta, 0.0);
            }
        }
        let f1s1 = self.f[0].at(self.s[0]).to_f64().abs();
        l.push_decided(
            "f1_nonzero",
            &[1],
            f1s1,
            Relation::Gt,
            eta,
            !self.f[0].at(self.s[0]).is_negligible(eta),
        );

        let eps_ok = check_eps(eps, &rational(4, 33), "4/33").is_ok();
        l.push_decided("eps_range", &[], eps, Relation::Lt, 4.0 / 33.0, eps_ok);

        let ordered = self.s[0] == self.n[0] && (1..d).all(|k| self.n[k - 1] < self.s[k] && self.s[k] < self.n[k]);
        l.push_flag("interleaved", &[], ordered);

        for (k, fk) in self.f.iter().enumerate() {
            let nk = norm(fk, &space)?;
            l.push("unit_norm", &[k + 1], (nk - 1.0).abs(), Relation::Le, 0.0, eta);
        }

        for k in 1..d {
            let at = self.s[k];
            let lhs = self.f[..k].iter().fold(S::zero(), |a, x| a + x.at(at).abs());
            let coef = S::from_f64(eps / pow2(k + 1));
            let rhs = coef * self.f[k].at(at).abs();
            l.push_decided("dominance", &[k], lhs.to_f64(), Relation::Lt, rhs.to_f64(), lhs < rhs);
        }

        for k in 0..d {
            let acc = abs_sum(&self.f[..=k])?;
            let tn = tail_norm(&acc, self.n[k], &space)?;
            l.push("tail", &[k + 1], tn, Relation::Lt, eps / pow2(k + 2), 0.0);
        }

        for k in 0..d {
            let idx = [k + 1];
            let (lo, hi) = self.sigma[k];
            let expect = (if k == 0 { 1 } else { self.n[k - 1] + 1 }, self.n[k]);
            l.push_flag("window_bounds", &idx, (lo, hi) == expect);
            let window = self.f[k].window(lo, hi);
            l.push_flag("window_matches", &idx, window == self.f_tilde[k]);
            let wn = full_norm(&self.f_tilde[k], &space)?;
            let level = eps / pow2(k + 2);
            l.push("window_norm_lower", &idx, wn, Relation::Ge, 1.0 - level, eta);
            l.push("window_norm_upper", &idx, wn, Relation::Le, 1.0, eta);
            let resid = full_norm(&self.f[k].sub(&self.f_tilde[k])?, &space)?;
            l.push("window_residual", &idx, resid, Relation::Lt, level, 0.0);

            let gk = &self.g[k];
            let outside = gk
                .coords()
                .iter()
                .enumerate()
                .any(|(i, x)| !(lo..=hi).contains(&(i + 1)) && !x.is_zero());
            l.push_flag("block_support", &idx, !outside && gk.tail_bound() == 0.0);
            let gn = norm(gk, &space)?;
            l.push("block_normalized", &idx, (gn - 1.0).abs(), Relation::Le, 0.0, eta);
            let gr = full_norm(&self.f[k].sub(gk)?, &space)?;
            let bound = 4.0 / (4.0 - eps) * (2.0 * eps / pow2(k + 2));
            l.push("block_residual", &idx, gr, Relation::Le, bound, eta);
        }

        let fresh = small_perturbation_cert(&self.g, &self.f, 1.0, 1.0, &space)?;
        l.push(
            "delta_recorded",
            &[],
            (fresh.delta - self.delta).abs(),
            Relation::Le,
            0.0,
            eta * (1.0 + self.delta),
        );
        l.push("delta", &[], fresh.delta, Relation::Le, 4.0 * eps / (4.0 - eps), eta);
        l.push("small_perturbation", &[], 8.0 * fresh.delta, Relation::Lt, 1.0, 0.0);
        l.push_flag("perturb_matches", &[], perturb_close(&fresh, &self.perturb, eta));

        let p = self.projection()?;
        let est = estimate_norms(&p, &self.f, &space, eta, self.estimates.trials, self.estimates.seed)?;
        l.push(
            "p_norm_sampled",
            &[],
            est.p_norm_lower,
            Relation::Le,
            p.norm_upper(),
            eta,
        );
        if let Some(q) = fresh.q_norm_bound {
            l.push("q_norm_sampled", &[], est.q_norm_lower, Relation::Le, q, eta);
        }
        if let Some(kb) = fresh.basis_constant_bound {
            l.push(
                "basis_constant_sampled",
                &[],
                est.basis_constant_lower,
                Relation::Le,
                kb,
                eta,
            );
        }
        l.push_flag("estimates_match", &[], estimates_close(&est, &self.estimates));
        Ok(l)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn opt_close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y, tol),
        (None, None) => true,
        _ => false,
    }
}

pub(crate) fn perturb_close(a: &PerturbCert, b: &PerturbCert, tol: f64) -> bool {
    a.ok == b.ok
        && close(a.k, b.k, tol)
        && close(a.p_norm, b.p_norm, tol)
        && close(a.delta, b.delta, tol)
        && opt_close(a.t_norm_bound, b.t_norm_bound, tol)
        && opt_close(a.basis_constant_bound, b.basis_constant_bound, tol)
        && opt_close(a.q_norm_bound, b.q_norm_bound, tol)
        && opt_close(a.q_norm_bound_tight, b.q_norm_bound_tight, tol)
}

fn estimates_close(a: &NormEstimates, b: &NormEstimates) -> bool {
    let tol = 1e-9;
    a.trials == b.trials
        && a.seed == b.seed
        && close(a.p_norm_lower, b.p_norm_lower, tol)
        && close(a.q_norm_lower, b.q_norm_lower, tol)
        && close(a.basis_constant_lower, b.basis_constant_lower, tol)
}
