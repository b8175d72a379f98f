//! Basic sequence `f_{n_k}` in a sup-norm space with `f_{n_k}(n_k) = 1`,
//! a triangular zero pattern and `1 <= |f_{n_k}|∞ <= 2`.
//!
//! Step `k` picks the least `n` such that the current constrained subspace
//! `W` meets `V_n`, then adds `n` and a norming coordinate set `J_k` for
//! `span{f_{n_1}, …, f_{n_k}}` to the constraints. Every later vector
//! vanishes on `J_k`, which gives
//! `|y + z|∞ >= max_{j ∈ J_k} |y(j)| >= (1 − r_k)|y|∞ >= |y|∞ / (1 + ε_k)`
//! for `y` in the span and `z` in the later span, with `r_k = ρ ε_k / 2`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::halving::find_in_halving_set;
use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::linalg;
use crate::lp::maximize_over_slab;
use crate::sampling::{norm_f64, rng, uniform_coeffs};
use crate::scalar::Scalar;
use crate::seq::{AmbientSpace, Seq};
use crate::subspace::Subspace;

/// Margin below the acceptance threshold for LP values, absorbing solver
/// round-off.
const LP_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MazurOptions {
    /// `ε_1 = 1`, `ε_i ∈ (0, 1)` afterwards; at least `depth` entries.
    pub eps_seq: Vec<f64>,
    pub depth: usize,
    /// `ρ ∈ (0, 1]`; norming sets certify `r_k = ρ ε_k / 2`.
    pub net_resolution: f64,
    /// Coefficient vectors for the sampled basis inequality.
    pub samples: usize,
    pub seed: u64,
    /// Stop at a model limit and keep what was built instead of failing.
    pub allow_partial: bool,
}

/// `ε_1 = 1`, `ε_i = 2^{-i}`.
pub fn default_eps_seq(len: usize) -> Vec<f64> {
    (1..=len)
        .map(|i| if i == 1 { 1.0 } else { 2f64.powi(-(i as i32)) })
        .collect()
}

impl MazurOptions {
    pub fn new(depth: usize) -> Self {
        MazurOptions {
            eps_seq: default_eps_seq(depth),
            depth,
            net_resolution: 1.0,
            samples: 1000,
            seed: 0,
            allow_partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MazurCert<S: Scalar> {
    pub space: AmbientSpace,
    pub eta: f64,
    pub eps_seq: Vec<f64>,
    /// `Π (1 + ε_i)` over the recorded sequence.
    pub eps_product: f64,
    pub net_resolution: f64,
    pub n: Vec<usize>,
    pub f: Vec<Seq<S>>,
    /// `J_k`, the coordinates whose functionals norm `span{f_{n_1..n_k}}`.
    pub norming_sets: Vec<Vec<usize>>,
    pub net_sizes: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Why construction stopped before the requested depth, if it did.
    pub stopped_early: Option<String>,
    pub ledger: Ledger,
}

fn check_eps_seq(eps: &[f64]) -> Result<()> {
    if eps.first() != Some(&1.0) {
        return Err(Error::Precondition("eps_seq must start with 1".into()));
    }
    if let Some((i, e)) = eps.iter().enumerate().skip(1).find(|(_, e)| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Precondition(format!(
            "eps_{} = {e} must lie strictly between 0 and 1",
            i + 1
        )));
    }
    Ok(())
}

fn as_rows<S: Scalar>(f: &[Seq<S>]) -> Vec<Vec<f64>> {
    let len = f.first().map_or(0, Seq::len);
    (1..=len)
        .map(|i| f.iter().map(|x| x.at(i).to_f64()).collect())
        .collect()
}

/// Largest certified value of `max |y(i)| / max_{j∈J} |y(j)|` over `i ∉ J`
/// and `y ∈ span(f)`, where each `i` is either cleared by the cheap bound
/// `|(F L⁻¹)_i|_1` or by an LP. With `grow`, coordinates whose value
/// exceeds `limit` are added to `J` instead.
fn norming_scan<S: Scalar>(f: &[Seq<S>], n: &[usize], j: &mut BTreeSet<usize>, limit: f64, grow: bool) -> Result<f64> {
    let rows = as_rows(f);
    let l: Vec<Vec<f64>> = n.iter().map(|&i| rows[i - 1].clone()).collect();
    let linv = linalg::inverse(&l, 1e-12)?;
    let mut worst = 0.0f64;
    for i in 1..=rows.len() {
        if j.contains(&i) {
            continue;
        }
        let fi = &rows[i - 1];
        if fi.iter().all(|x| *x == 0.0) {
            continue;
        }
        let quick: f64 = (0..n.len())
            .map(|c| fi.iter().zip(&linv).map(|(a, row)| a * row[c]).sum::<f64>().abs())
            .sum();
        if quick <= limit - LP_MARGIN {
            worst = worst.max(quick);
            continue;
        }
        let cons: Vec<&[f64]> = j.iter().map(|&k| rows[k - 1].as_slice()).collect();
        let value = maximize_over_slab(fi, &cons)?.value;
        if grow && value > limit - LP_MARGIN {
            j.insert(i);
        } else {
            worst = worst.max(value);
        }
    }
    Ok(worst)
}

/// `min over samples of |Σ_{≤m}| Π_{i=n}^{m−1} (1+ε_i) / |Σ_{≤n}|` for
/// every `n < m`, as `((n, m), ratio)` with 1-based `n, m`.
fn basis_inequality<S: Scalar>(f: &[Seq<S>], eps: &[f64], samples: usize, seed: u64) -> Vec<((usize, usize), f64)> {
    let d = f.len();
    let rows: Vec<Vec<f64>> = f
        .iter()
        .map(|x| x.coords().iter().map(Scalar::to_f64).collect())
        .collect();
    let len = rows.first().map_or(0, Vec::len);
    let mut worst = vec![vec![f64::INFINITY; d]; d];
    let mut r = rng(seed, 2);
    for _ in 0..samples {
        let a = uniform_coeffs(&mut r, d);
        let mut sum = vec![0.0; len];
        let mut norms = Vec::with_capacity(d);
        for (ak, fk) in a.iter().zip(&rows) {
            for (x, y) in sum.iter_mut().zip(fk) {
                *x += ak * y;
            }
            norms.push(norm_f64(&sum, &AmbientSpace::LInfty));
        }
        for nn in 0..d {
            if norms[nn] == 0.0 {
                continue;
            }
            let mut factor = 1.0;
            for m in nn + 1..d {
                factor *= 1.0 + eps[m - 1];
                let ratio = norms[m] * factor / norms[nn];
                worst[nn][m] = worst[nn][m].min(ratio);
            }
        }
    }
    worst
        .iter()
        .enumerate()
        .flat_map(|(nn, row)| {
            row.iter()
                .enumerate()
                .skip(nn + 1)
                .map(move |(m, &w)| ((nn + 1, m + 1), w))
        })
        .collect()
}

pub fn mazur_basic_sequence<S: Scalar>(v: &Subspace<S>, opts: &MazurOptions) -> Result<MazurCert<S>> {
    let space = v.space();
    if !space.is_sup() {
        return Err(Error::Config(format!("expected l_inf or c0, got {}", space.name())));
    }
    if opts.depth == 0 || opts.eps_seq.len() < opts.depth {
        return Err(Error::Precondition(format!(
            "need depth >= 1 and at least depth eps values (depth {}, {} given)",
            opts.depth,
            opts.eps_seq.len()
        )));
    }
    check_eps_seq(&opts.eps_seq)?;
    if !(opts.net_resolution > 0.0 && opts.net_resolution <= 1.0) {
        return Err(Error::Precondition("net_resolution must lie in (0, 1]".into()));
    }
    let eta = v.eta();
    let t_max = v.truncation();
    let mut constraints: BTreeSet<usize> = BTreeSet::new();
    let mut n: Vec<usize> = Vec::new();
    let mut f: Vec<Seq<S>> = Vec::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut stopped_early = None;

    for k in 0..opts.depth {
        let step = (|| -> Result<()> {
            let w = if constraints.is_empty() {
                v.basis().to_vec()
            } else {
                let c: Vec<usize> = constraints.iter().copied().collect();
                v.vanishing_on(&c)?
            };
            if w.is_empty() {
                return Err(Error::DimensionExhausted {
                    prefix: constraints.len(),
                    dim: v.dim(),
                });
            }
            let from = n.last().map_or(1, |&x| x + 1);
            let mut found = None;
            for s in from..=t_max {
                if let Some(c) = find_in_halving_set(&w, s, eta)? {
                    found = Some((s, c));
                    break;
                }
            }
            let (s, cand) = found.ok_or_else(|| {
                Error::SearchExhausted(format!("no n_{} in [{from}, {t_max}] with V_n meeting W", k + 1))
            })?;
            let mut fk = cand.scale(&(S::one() / cand.at(s).clone()));
            fk.set(s, S::one());
            n.push(s);
            f.push(fk);
            if k + 1 < opts.depth {
                let r = opts.net_resolution * opts.eps_seq[k] / 2.0;
                let mut j: BTreeSet<usize> = sets
                    .last()
                    .map(|p: &Vec<usize>| p.iter().copied().collect())
                    .unwrap_or_default();
                j.extend(n.iter().copied());
                norming_scan(&f, &n, &mut j, 1.0 / (1.0 - r), true)?;
                constraints.extend(j.iter().copied());
                sets.push(j.into_iter().collect());
            }
            Ok(())
        })();
        match step {
            Ok(()) => {}
            Err(e) if opts.allow_partial && e.is_model_limit() && !f.is_empty() => {
                stopped_early = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    sets.truncate(f.len().saturating_sub(1));
    let eps_seq = opts.eps_seq[..f.len()].to_vec();
    let mut cert = MazurCert {
        space,
        eta,
        eps_product: eps_seq.iter().map(|e| 1.0 + e).product(),
        eps_seq,
        net_resolution: opts.net_resolution,
        net_sizes: sets.iter().map(Vec::len).collect(),
        n,
        f,
        norming_sets: sets,
        samples: opts.samples,
        seed: opts.seed,
        stopped_early,
        ledger: Ledger::new(),
    };
    cert.ledger = cert.audit()?;
    if let Some(bad) = cert.ledger.named("basis_inequality").find(|c| !c.pass) {
        return Err(Error::NetTooCoarse(bad.to_string()));
    }
    Ok(cert)
}

impl<S: Scalar> MazurCert<S> {
    pub fn depth(&self) -> usize {
        self.f.len()
    }

    /// `f_{n}` for a constructed index `n`.
    pub fn at_index(&self, idx: usize) -> Option<&Seq<S>> {
        self.n.iter().position(|&x| x == idx).map(|k| &self.f[k])
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.f.len();
        let t = self.f.first().map_or(0, Seq::len);
        let bad = d == 0
            || self.n.len() != d
            || self.eps_seq.len() != d
            || self.norming_sets.len() + 1 != d
            || self.net_sizes.len() + 1 != d
            || self.f.iter().any(|x| x.len() != t)
            || self
                .n
                .iter()
                .chain(self.norming_sets.iter().flatten())
                .any(|&i| i == 0 || i > t)
            || !self.space.is_sup();
        if bad {
            return Err(Error::MalformedCertificate("mazur fields are inconsistent".into()));
        }
        Ok(())
    }

    pub fn audit(&self) -> Result<Ledger> {
        self.check_shape()?;
        let eta = self.eta;
        let d = self.depth();
        let mut l = Ledger::new();
        for jj in 0..d {
            for i in 0..jj {
                let v = self.f[jj].at(self.n[i]);
                l.push_decided(
                    "triangular_zero",
                    &[jj + 1, i + 1],
                    v.to_f64().abs(),
                    Relation::Le,
                    eta,
                    v.is_negligible(eta),
                );
            }
        }
        for (k, set) in self.norming_sets.iter().enumerate() {
            let worst = self.f[k + 1..]
                .iter()
                .flat_map(|x| set.iter().map(move |&j| x.at(j).to_f64().abs()))
                .fold(0.0, f64::max);
            l.push("norming_zero", &[k + 1], worst, Relation::Le, eta, 0.0);
        }
        for (k, fk) in self.f.iter().enumerate() {
            let pivot = fk.at(self.n[k]).clone();
            let one = if S::EXACT {
                pivot == S::one()
            } else {
                (pivot.to_f64() - 1.0).abs() <= eta
            };
            l.push_decided("pivot_one", &[k + 1], pivot.to_f64(), Relation::Le, 1.0, one);
            let sup = fk.sup_abs();
            let sup_f = sup.to_f64();
            let two = S::one() + S::one();
            l.push_decided(
                "norm_lower",
                &[k + 1],
                sup_f,
                Relation::Ge,
                1.0,
                sup >= S::one() || sup_f >= 1.0 - eta,
            );
            l.push_decided(
                "norm_upper",
                &[k + 1],
                sup_f,
                Relation::Le,
                2.0,
                sup <= two || sup_f <= 2.0 + eta,
            );
        }
        l.push_flag("increasing", &[], self.n.windows(2).all(|w| w[0] < w[1]));
        l.push_flag("eps_first", &[], self.eps_seq[0] == 1.0);
        for (i, e) in self.eps_seq.iter().enumerate().skip(1) {
            l.push_flag("eps_range", &[i + 1], *e > 0.0 && *e < 1.0);
        }
        let product: f64 = self.eps_seq.iter().map(|e| 1.0 + e).product();
        l.push(
            "eps_product",
            &[],
            (product - self.eps_product).abs(),
            Relation::Le,
            0.0,
            eta * product,
        );
        l.push_flag(
            "net_sizes",
            &[],
            self.net_sizes
                .iter()
                .zip(&self.norming_sets)
                .all(|(a, b)| *a == b.len()),
        );
        for (k, set) in self.norming_sets.iter().enumerate() {
            let mut j: BTreeSet<usize> = set.iter().copied().collect();
            let contains = self.n[..=k].iter().all(|x| j.contains(x));
            l.push_flag("norming_contains_pivots", &[k + 1], contains);
            let r = self.net_resolution * self.eps_seq[k] / 2.0;
            let limit = 1.0 / (1.0 - r);
            let worst = norming_scan(&self.f[..=k], &self.n[..=k], &mut j, limit, false)?;
            l.push("norming_set", &[k + 1], worst, Relation::Le, limit, 0.0);
        }
        for ((nn, m), ratio) in basis_inequality(&self.f, &self.eps_seq, self.samples, self.seed) {
            l.push("basis_inequality", &[nn, m], ratio, Relation::Ge, 1.0, eta);
        }
        Ok(l)
    }
}
