//! The sets `V_s = {f ≠ 0 : |f(s)| >= |f|∞ / 2}`.

use crate::error::{Error, Result};
use crate::lp::maximize_over_slab;
use crate::scalar::Scalar;
use crate::seq::Seq;

/// Grid used to turn a floating LP solution into exact coefficients.
const GRID: f64 = (1u64 << 24) as f64;

/// `|f(s)| >= |f|∞ / 2`, exactly for rationals and with relative slack
/// `eta` for doubles.
pub fn in_halving_set<S: Scalar>(f: &Seq<S>, s: usize, eta: f64) -> bool {
    let sup = f.sup_abs();
    if sup.is_zero() {
        return false;
    }
    let v = f.at(s).abs();
    let two = S::one() + S::one();
    if S::EXACT {
        v * two >= sup
    } else {
        (v * two).to_f64() >= sup.to_f64() * (1.0 - eta)
    }
}

/// Least `s` with `f ∈ V_s`.
pub fn halving_support<S: Scalar>(f: &Seq<S>, eta: f64) -> Result<usize> {
    if f.sup_abs().is_zero() {
        return Err(Error::ZeroVector);
    }
    (1..=f.len())
        .find(|&s| in_halving_set(f, s, eta))
        .ok_or(Error::ZeroVector)
}

/// An element of `span(rows)` lying in `V_s`, if the LP finds one.
///
/// A row that already qualifies is returned as is. Otherwise the LP
/// `max c·w(s)` subject to `|Σ c_i w_i(j)| <= 1` for every `j` decides
/// feasibility (optimum `>= 1/2 − eta`) and the rounded maximizer is
/// confirmed directly.
pub fn find_in_halving_set<S: Scalar>(rows: &[Seq<S>], s: usize, eta: f64) -> Result<Option<Seq<S>>> {
    if let Some(r) = rows.iter().find(|r| in_halving_set(r, s, eta)) {
        return Ok(Some(r.clone()));
    }
    if rows.iter().all(|r| r.at(s).is_zero()) {
        return Ok(None);
    }
    let len = rows.first().map_or(0, Seq::len);
    let objective: Vec<f64> = rows.iter().map(|r| r.at(s).to_f64()).collect();
    let constraints: Vec<Vec<f64>> = (1..=len)
        .map(|j| rows.iter().map(|r| r.at(j).to_f64()).collect())
        .collect();
    let refs: Vec<&[f64]> = constraints.iter().map(Vec::as_slice).collect();
    let opt = maximize_over_slab(&objective, &refs)?;
    if opt.value < 0.5 - eta {
        return Ok(None);
    }
    let coeffs: Vec<S> = opt
        .point
        .iter()
        .map(|&c| {
            if S::EXACT {
                S::from_f64((c * GRID).round() / GRID)
            } else {
                S::from_f64(c)
            }
        })
        .collect();
    let mut cand = Seq::zeros(len);
    for (c, r) in coeffs.iter().zip(rows) {
        if !c.is_zero() {
            cand = cand.axpy(c, r)?;
        }
    }
    Ok(in_halving_set(&cand, s, eta).then_some(cand))
}
