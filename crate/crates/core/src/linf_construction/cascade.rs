//! The `h_{t_k}` family: per level, two consecutive Mazur vectors are
//! combined so that the result is 1 at one of their pivots and tends to 0
//! along the surviving indices.

use serde::{Deserialize, Serialize};

use super::mazur::MazurCert;
use super::stabilize::{extract_stabilizing_subsequence, Stabilized};
use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::scalar::Scalar;
use crate::seq::{AmbientSpace, Seq};

pub const DEFAULT_STAB_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeCase {
    /// `L1 = 0`: `h = g1`.
    FirstVanishes,
    /// `L1 ≠ 0, L2 = 0`: `h = g2`.
    SecondVanishes,
    /// `|L1| <= |L2|`: `h = g1 − (L1/L2) g2`.
    FirstSmaller,
    /// `|L2| < |L1|`: `h = g2 − (L2/L1) g1`.
    SecondSmaller,
}

impl CascadeCase {
    pub fn bound(self) -> f64 {
        match self {
            CascadeCase::FirstVanishes => 6.0,
            CascadeCase::SecondVanishes => 2.0,
            CascadeCase::FirstSmaller | CascadeCase::SecondSmaller => 8.0,
        }
    }

    /// Whether `h` is normalized at `m1` (else at `m2`).
    pub fn pivots_first(self) -> bool {
        matches!(self, CascadeCase::FirstVanishes | CascadeCase::FirstSmaller)
    }

    pub fn number(self) -> usize {
        match self {
            CascadeCase::FirstVanishes => 1,
            CascadeCase::SecondVanishes => 2,
            CascadeCase::FirstSmaller => 3,
            CascadeCase::SecondSmaller => 4,
        }
    }

    /// `"= 0"` means `|L| <= tol`; `|L1| = |L2|` goes to the third case.
    pub fn select(l1: f64, l2: f64, tol: f64) -> Self {
        if l1.abs() <= tol {
            CascadeCase::FirstVanishes
        } else if l2.abs() <= tol {
            CascadeCase::SecondVanishes
        } else if l1.abs() <= l2.abs() {
            CascadeCase::FirstSmaller
        } else {
            CascadeCase::SecondSmaller
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLevel {
    pub m1: usize,
    pub m2: usize,
    pub case: CascadeCase,
    pub key1: i64,
    pub key2: i64,
    pub l1: f64,
    pub l2: f64,
    pub t: usize,
    /// `|h|∞`.
    pub norm: f64,
    /// Indices surviving stabilization; the next level draws from these.
    pub next: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct HCascadeCert<S: Scalar> {
    pub space: AmbientSpace,
    pub eta: f64,
    pub stab_tol: f64,
    /// The index list the cascade started from.
    pub m: Vec<usize>,
    pub t: Vec<usize>,
    pub h: Vec<Seq<S>>,
    pub levels: Vec<CascadeLevel>,
    pub ledger: Ledger,
}

fn pair<S: Scalar>(mazur: &MazurCert<S>, m1: usize, m2: usize) -> Result<(Seq<S>, Seq<S>)> {
    let get = |i: usize| {
        mazur
            .at_index(i)
            .ok_or_else(|| Error::Precondition(format!("index {i} is not a Mazur pivot")))
    };
    let (f1, f2) = (get(m1)?, get(m2)?);
    let mut g1 = f1.axpy(&-f1.at(m2).clone(), f2)?;
    g1.set(m2, S::zero());
    Ok((g1, f2.clone()))
}

fn combine<S: Scalar>(
    case: CascadeCase,
    g1: &Seq<S>,
    g2: &Seq<S>,
    l1: &S,
    l2: &S,
    m1: usize,
    m2: usize,
) -> Result<Seq<S>> {
    let mut h = match case {
        CascadeCase::FirstVanishes => g1.clone(),
        CascadeCase::SecondVanishes => g2.clone(),
        CascadeCase::FirstSmaller => g1.axpy(&-(l1.clone() / l2.clone()), g2)?,
        CascadeCase::SecondSmaller => g2.axpy(&-(l2.clone() / l1.clone()), g1)?,
    };
    let (t, other) = if case.pivots_first() { (m1, m2) } else { (m2, m1) };
    h.set(t, S::one());
    h.set(other, S::zero());
    Ok(h)
}

/// Runs `depth` levels starting from `m`, a strictly increasing list of
/// Mazur pivots.
pub fn build_h_cascade<S: Scalar>(
    mazur: &MazurCert<S>,
    m: &[usize],
    depth: usize,
    stab_tol: f64,
) -> Result<HCascadeCert<S>> {
    if depth == 0 {
        return Err(Error::Precondition("cascade depth must be at least 1".into()));
    }
    if let Some(&bad) = m.iter().find(|&&i| mazur.at_index(i).is_none()) {
        return Err(Error::Precondition(format!("index {bad} is not a Mazur pivot")));
    }
    let eta = mazur.eta;
    let mut cur = m.to_vec();
    let mut levels = Vec::with_capacity(depth);
    let mut h = Vec::with_capacity(depth);
    for level in 1..=depth {
        if cur.len() < 2 {
            return Err(Error::InsufficientStabilization(format!(
                "level {level} has {} indices left",
                cur.len()
            )));
        }
        let (m1, m2) = (cur[0], cur[1]);
        let (g1, g2) = pair(mazur, m1, m2)?;
        let Stabilized {
            indices,
            key1,
            key2,
            l1,
            l2,
        } = extract_stabilizing_subsequence(&g1, &g2, &cur, stab_tol)?;
        let case = CascadeCase::select(l1, l2, stab_tol);
        let (s1, s2) = (
            Stabilized::limit::<S>(key1, stab_tol),
            Stabilized::limit::<S>(key2, stab_tol),
        );
        let hk = combine(case, &g1, &g2, &s1, &s2, m1, m2)?;
        let norm = hk.sup_abs().to_f64();
        if norm > case.bound() + eta {
            return Err(Error::CaseBoundViolated {
                level,
                norm,
                bound: case.bound(),
            });
        }
        let t = if case.pivots_first() { m1 } else { m2 };
        levels.push(CascadeLevel {
            m1,
            m2,
            case,
            key1,
            key2,
            l1,
            l2,
            t,
            norm,
            next: indices.clone(),
        });
        h.push(hk);
        cur = indices;
    }
    let mut cert = HCascadeCert {
        space: mazur.space,
        eta,
        stab_tol,
        m: m.to_vec(),
        t: levels.iter().map(|l| l.t).collect(),
        h,
        levels,
        ledger: Ledger::new(),
    };
    cert.ledger = cert.audit(mazur)?;
    Ok(cert)
}

impl<S: Scalar> HCascadeCert<S> {
    pub fn depth(&self) -> usize {
        self.h.len()
    }

    pub fn case_trace(&self) -> Vec<CascadeCase> {
        self.levels.iter().map(|l| l.case).collect()
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.h.len();
        let len = self.h.first().map_or(0, Seq::len);
        let bad = d == 0
            || self.levels.len() != d
            || self.t.len() != d
            || self.h.iter().any(|x| x.len() != len)
            || self.t.iter().any(|&t| t == 0 || t > len)
            || self.levels.iter().any(|l| l.next.iter().any(|&j| j == 0 || j > len));
        if bad {
            return Err(Error::MalformedCertificate("cascade fields are inconsistent".into()));
        }
        Ok(())
    }

    /// Recomputes every level from the Mazur vectors it was built from.
    pub fn audit(&self, mazur: &MazurCert<S>) -> Result<Ledger> {
        self.check_shape()?;
        let eta = self.eta;
        let tol = self.stab_tol;
        let mut l = Ledger::new();
        for k in 0..self.depth() {
            for s in 0..k {
                let v = self.h[k].at(self.t[s]);
                l.push_decided(
                    "h_zero",
                    &[k + 1, s + 1],
                    v.to_f64().abs(),
                    Relation::Le,
                    eta,
                    v.is_negligible(eta),
                );
            }
        }
        let mut cur = self.m.clone();
        for (k, (lev, hk)) in self.levels.iter().zip(&self.h).enumerate() {
            let idx = [k + 1];
            let from_list = cur.len() >= 2 && lev.m1 == cur[0] && lev.m2 == cur[1];
            l.push_flag("level_pair", &idx, from_list);
            let (g1, g2) = pair(mazur, lev.m1, lev.m2)?;
            let stab = extract_stabilizing_subsequence(&g1, &g2, &cur, tol).ok();
            let same = stab
                .as_ref()
                .is_some_and(|s| s.indices == lev.next && s.key1 == lev.key1 && s.key2 == lev.key2);
            l.push_flag("stabilization_matches", &idx, same);
            let (lim1, lim2) = (lev.key1 as f64 * tol, lev.key2 as f64 * tol);
            for (name, g, lim) in [("stable_g1", &g1, lim1), ("stable_g2", &g2, lim2)] {
                let worst = lev
                    .next
                    .iter()
                    .map(|&j| (g.at(j).to_f64() - lim).abs())
                    .fold(0.0, f64::max);
                l.push(name, &idx, worst, Relation::Le, tol / 2.0, eta);
            }
            l.push_flag(
                "case_consistent",
                &idx,
                CascadeCase::select(lim1, lim2, tol) == lev.case,
            );
            let t = if lev.case.pivots_first() { lev.m1 } else { lev.m2 };
            l.push_flag("t_matches_case", &idx, t == lev.t && self.t[k] == lev.t);
            let (s1, s2) = (
                Stabilized::limit::<S>(lev.key1, tol),
                Stabilized::limit::<S>(lev.key2, tol),
            );
            let redo = combine(lev.case, &g1, &g2, &s1, &s2, lev.m1, lev.m2)?;
            let diff = redo.sub(hk)?.sup_abs();
            l.push_decided(
                "h_recomputed",
                &idx,
                diff.to_f64(),
                Relation::Le,
                eta,
                diff.is_negligible(eta),
            );
            let at_t = hk.at(lev.t);
            let one = if S::EXACT {
                *at_t == S::one()
            } else {
                (at_t.to_f64() - 1.0).abs() <= eta
            };
            l.push_decided("h_pivot_one", &idx, at_t.to_f64(), Relation::Le, 1.0, one);
            let norm = hk.sup_abs().to_f64();
            l.push("h_norm", &idx, norm, Relation::Le, lev.case.bound(), eta);
            l.push("h_norm_recorded", &idx, (norm - lev.norm).abs(), Relation::Le, 0.0, eta);
            let envelope = lev.next.iter().map(|&j| hk.at(j).to_f64().abs()).fold(0.0, f64::max);
            l.push("h_limit_envelope", &idx, envelope, Relation::Le, 1.5 * tol, eta);
            let after = lev.next.first().is_some_and(|&j| j > lev.m2) && lev.m1 < lev.m2;
            l.push_flag("levels_increase", &idx, after);
            cur = lev.next.clone();
        }
        Ok(l)
    }
}
