//! Approximating an arbitrary `f ∈ V` by elements with prescribed zeros.
//!
//! In `ℓ_p` the `l` construction is started from `f / |f|_p` and returns
//! `|f|_p l_1`. In `c0` the Mazur pivots where `f` is smallest carry a
//! summable budget, and `g = f − Σ f(s_k) l_{s_k}` vanishes on every `s_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::linf_construction::{
    build_h_cascade, construct_l_family, default_eps_seq, mazur_basic_sequence, HCascadeCert, LInfLCert, MazurCert,
    MazurOptions, DEFAULT_STAB_TOL,
};
use crate::lp_construction::{construct_lemma_b, LemmaAOptions, LemmaBCert};
use crate::sampling::DEFAULT_TRIALS;
use crate::scalar::Scalar;
use crate::seq::{norm, AmbientSpace, Seq};
use crate::subspace::Subspace;

/// `|l_{s_k}|∞ <= 9` turns `Σ |f(s_k)| <= ε / 9` into `|g − f|∞ <= ε`.
pub const SERIES_FACTOR: f64 = 9.0;

/// Largest `ε` accepted by the `l` construction in `ℓ_p`.
const LP_EPS_LIMIT: f64 = 1.0 / 512.0;
const LP_EPS_FALLBACK: f64 = 1.0 / 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOptions {
    /// Number of `l` functionals (and of zeros imposed on the output).
    pub depth: usize,
    /// Mazur vectors scanned for small values of `f` (`c0` only).
    pub mazur_len: usize,
    pub stab_tol: f64,
    pub net_resolution: f64,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
}

impl DensityOptions {
    pub fn new(depth: usize) -> Self {
        DensityOptions {
            depth,
            mazur_len: 6 * (depth + 1) + 10,
            stab_tol: DEFAULT_STAB_TOL,
            net_resolution: 1.0,
            samples: 200,
            trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case", bound = "S: Scalar")]
pub enum DensitySource<S: Scalar> {
    Lp {
        norm_f: f64,
        lemma_b: Box<LemmaBCert<S>>,
    },
    C0 {
        /// Pivots kept under the `ε / 9` budget, in increasing order.
        m: Vec<usize>,
        mazur: Box<MazurCert<S>>,
        cascade: Box<HCascadeCert<S>>,
        l: Box<LInfLCert<S>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DensityCert<S: Scalar> {
    pub space: AmbientSpace,
    pub eta: f64,
    pub eps: f64,
    pub f: Seq<S>,
    pub g: Seq<S>,
    /// Coordinates where `g` is zero by construction.
    pub zero_set: Vec<usize>,
    /// `|g − f|`.
    pub distance: f64,
    /// The bound `distance` is checked against.
    pub distance_bound: f64,
    pub source: DensitySource<S>,
    pub ledger: Ledger,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange(format!("eps must be positive, got {eps}")))
    }
}

/// `ε` handed to the `l` construction: `ε` itself if allowed, else `1/600`.
pub(crate) fn lp_inner_eps(eps: f64) -> f64 {
    if eps < LP_EPS_LIMIT {
        eps
    } else {
        LP_EPS_FALLBACK
    }
}

/// `|f|_p l_1` with `l_1` built from `f / |f|_p`.
pub fn density_repair_lp<S: Scalar>(
    v: &Subspace<S>,
    f: &Seq<S>,
    eps: f64,
    opts: &DensityOptions,
) -> Result<DensityCert<S>> {
    check_eps(eps)?;
    let space = v.space();
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut a = LemmaAOptions::new(lp_inner_eps(eps), opts.depth);
    a.f1 = Some(f.clone());
    a.trials = opts.trials;
    a.seed = opts.seed;
    let lemma_b = construct_lemma_b(v, &a)?;
    let norm_f = norm(f, &space)?;
    let scale = exact_or_float_norm(f, &space)?;
    let g = lemma_b.l[0].scale(&scale);
    let mut cert = DensityCert {
        space,
        eta: v.eta(),
        eps,
        f: f.clone(),
        distance: norm(&g.sub(f)?, &space)?,
        distance_bound: norm_f * eps / 2.0,
        zero_set: lemma_b.s[1..].to_vec(),
        g,
        source: DensitySource::Lp {
            norm_f,
            lemma_b: Box::new(lemma_b),
        },
        ledger: Ledger::new(),
    };
    cert.ledger = cert.audit()?;
    Ok(cert)
}

fn exact_or_float_norm<S: Scalar>(f: &Seq<S>, space: &AmbientSpace) -> Result<S> {
    match f.exact_norm(space) {
        Ok(n) => Ok(n),
        Err(Error::InexactNorm(_)) if !S::EXACT => Ok(S::from_f64(norm(f, space)?)),
        Err(e) => Err(e),
    }
}

/// Pivots of `mazur` with the smallest `|f|`, taken while their sum stays
/// within `budget`, returned in increasing order.
fn budget_pivots<S: Scalar>(mazur: &MazurCert<S>, f: &Seq<S>, budget: f64) -> Vec<usize> {
    let mut by_size: Vec<(f64, usize)> = mazur.n.iter().map(|&i| (f.at(i).to_f64().abs(), i)).collect();
    by_size.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut total = 0.0;
    let mut m = Vec::new();
    for (x, i) in by_size {
        if total + x > budget {
            break;
        }
        total += x;
        m.push(i);
    }
    m.sort_unstable();
    m
}

/// `g = f − Σ f(s_k) l_{s_k}` with `Σ |f(s_k)| <= ε / 9`.
pub fn density_repair_c0<S: Scalar>(
    v: &Subspace<S>,
    f: &Seq<S>,
    eps: f64,
    opts: &DensityOptions,
) -> Result<DensityCert<S>> {
    check_eps(eps)?;
    let space = v.space();
    if !space.is_sup() {
        return Err(Error::Config(format!("expected c0 or l_inf, got {}", space.name())));
    }
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mazur = mazur_basic_sequence(
        v,
        &MazurOptions {
            eps_seq: default_eps_seq(opts.mazur_len),
            depth: opts.mazur_len,
            net_resolution: opts.net_resolution,
            samples: opts.samples,
            seed: opts.seed,
            allow_partial: true,
        },
    )?;
    let m = budget_pivots(&mazur, f, eps / SERIES_FACTOR);
    let levels = opts.depth + 1;
    // Each level uses two pivots and stabilizes on at least four more.
    if m.len() < 2 * levels + 4 {
        return Err(Error::SearchExhausted(format!(
            "only {} of {} pivots fit the budget eps/9 = {:e}",
            m.len(),
            mazur.n.len(),
            eps / SERIES_FACTOR
        )));
    }
    let cascade = build_h_cascade(&mazur, &m, levels, opts.stab_tol)?;
    let l = construct_l_family(&cascade, opts.depth, None, opts.trials, opts.seed)?;
    let g = c0_output(f, &l)?;
    let mut cert = DensityCert {
        space,
        eta: v.eta(),
        eps,
        f: f.clone(),
        distance: norm(&g.sub(f)?, &space)?,
        distance_bound: eps,
        zero_set: l.s.clone(),
        g,
        source: DensitySource::C0 {
            m,
            mazur: Box::new(mazur),
            cascade: Box::new(cascade),
            l: Box::new(l),
        },
        ledger: Ledger::new(),
    };
    cert.ledger = cert.audit()?;
    Ok(cert)
}

fn c0_output<S: Scalar>(f: &Seq<S>, l: &LInfLCert<S>) -> Result<Seq<S>> {
    let mut g = f.clone();
    for (lk, &s) in l.l.iter().zip(&l.s) {
        g = g.axpy(&-f.at(s).clone(), lk)?;
    }
    for &s in &l.s {
        g.set(s, S::zero());
    }
    Ok(g)
}

impl<S: Scalar> DensityCert<S> {
    pub fn path(&self) -> &'static str {
        match self.source {
            DensitySource::Lp { .. } => "lp",
            DensitySource::C0 { .. } => "c0",
        }
    }

    pub fn audit(&self) -> Result<Ledger> {
        if self.f.len() != self.g.len() || self.zero_set.iter().any(|&s| s == 0 || s > self.g.len()) {
            return Err(Error::MalformedCertificate("density vectors are inconsistent".into()));
        }
        let eta = self.eta;
        let mut l = Ledger::new();
        for (k, &s) in self.zero_set.iter().enumerate() {
            let v = self.g.at(s);
            l.push_decided(
                "g_zero",
                &[k + 1],
                v.to_f64().abs(),
                Relation::Le,
                eta,
                v.is_negligible(eta),
            );
        }
        l.push_flag("f_nonzero", &[], !self.f.is_zero());
        l.push_flag("g_nonzero", &[], !self.g.is_zero());
        let distance = norm(&self.g.sub(&self.f)?, &self.space)?;
        l.push(
            "distance_recorded",
            &[],
            (distance - self.distance).abs(),
            Relation::Le,
            0.0,
            eta,
        );
        l.push("distance", &[], distance, Relation::Le, self.distance_bound, eta);
        match &self.source {
            DensitySource::Lp { norm_f, lemma_b } => {
                let nf = norm(&self.f, &self.space)?;
                l.push(
                    "norm_f_recorded",
                    &[],
                    (nf - norm_f).abs(),
                    Relation::Le,
                    0.0,
                    eta * nf.max(1.0),
                );
                l.push(
                    "distance_bound",
                    &[],
                    (self.distance_bound - nf * self.eps / 2.0).abs(),
                    Relation::Le,
                    0.0,
                    eta,
                );
                l.push_flag("inner_eps", &[], lemma_b.eps == lp_inner_eps(self.eps));
                l.push_flag("zero_set_matches", &[], self.zero_set == lemma_b.s[1..]);
                let f1 = self.f.scale(&(S::one() / exact_or_float_norm(&self.f, &self.space)?));
                let start = lemma_b.lemma_a.f[0].sub(&f1)?.sup_abs();
                l.push_decided(
                    "started_from_f",
                    &[],
                    start.to_f64(),
                    Relation::Le,
                    eta,
                    start.is_negligible(eta),
                );
                let redo = lemma_b.l[0].scale(&exact_or_float_norm(&self.f, &self.space)?);
                let diff = redo.sub(&self.g)?.sup_abs();
                l.push_decided(
                    "g_recomputed",
                    &[],
                    diff.to_f64(),
                    Relation::Le,
                    eta,
                    diff.is_negligible(eta),
                );
                l.extend(lemma_b.audit()?);
            }
            DensitySource::C0 {
                m,
                mazur,
                cascade,
                l: fam,
            } => {
                let budget = self.eps / SERIES_FACTOR;
                let picked: f64 = m.iter().map(|&i| self.f.at(i).to_f64().abs()).sum();
                l.push("budget", &[], picked, Relation::Le, budget, 0.0);
                l.push_flag("budget_pivots", &[], *m == budget_pivots(mazur, &self.f, budget));
                l.push_flag("cascade_from_budget", &[], cascade.m == *m);
                l.push_flag("zero_set_matches", &[], self.zero_set == fam.s);
                let sum: f64 = fam.s.iter().map(|&s| self.f.at(s).to_f64().abs()).sum();
                l.push("series_bound", &[], SERIES_FACTOR * sum, Relation::Le, self.eps, eta);
                let series: f64 = fam
                    .l
                    .iter()
                    .zip(&fam.s)
                    .map(|(lk, &s)| self.f.at(s).to_f64().abs() * lk.sup_abs().to_f64())
                    .sum();
                l.push("series_norm", &[], series, Relation::Le, self.eps, eta);
                let redo = c0_output(&self.f, fam)?;
                let diff = redo.sub(&self.g)?.sup_abs();
                l.push_decided(
                    "g_recomputed",
                    &[],
                    diff.to_f64(),
                    Relation::Le,
                    eta,
                    diff.is_negligible(eta),
                );
                l.extend(mazur.audit()?);
                l.extend(cascade.audit(mazur)?);
                l.extend(fam.audit(cascade)?);
            }
        }
        Ok(l)
    }
}
