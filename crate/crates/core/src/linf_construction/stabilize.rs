//! Finite stand-in for passing to a convergent subsequence: cluster the
//! values into buckets of width `tol` and keep the fullest bucket.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seq::Seq;

/// Fewest indices a bucket must hold to count as stabilized.
pub const MIN_STABLE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stabilized {
    pub indices: Vec<usize>,
    /// Bucket keys: `L = key · tol`.
    pub key1: i64,
    pub key2: i64,
    pub l1: f64,
    pub l2: f64,
}

impl Stabilized {
    /// `key · tol` in the scalar field.
    pub fn limit<S: Scalar>(key: i64, tol: f64) -> S {
        S::from_f64(tol) * S::from_f64(key as f64)
    }
}

fn bucket_key(v: f64, tol: f64) -> i64 {
    (v / tol).round() as i64
}

/// Indices of `among` in the fullest bucket of `g`, smaller key on ties.
fn fullest(g: &[f64], among: &[usize], tol: f64) -> (i64, Vec<usize>) {
    let mut buckets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (&j, &v) in among.iter().zip(g) {
        buckets.entry(bucket_key(v, tol)).or_default().push(j);
    }
    let mut best: Option<(i64, Vec<usize>)> = None;
    for (key, idx) in buckets {
        if best.as_ref().is_none_or(|(_, b)| idx.len() > b.len()) {
            best = Some((key, idx));
        }
    }
    best.unwrap_or((0, Vec::new()))
}

/// Drops `m_1, m_2`, then keeps the indices where `g1` falls in its fullest
/// bucket and, among those, where `g2` falls in its fullest bucket. Every
/// kept `j` satisfies `|g_i(j) − L_i| <= tol / 2`.
pub fn extract_stabilizing_subsequence<S: Scalar>(
    g1: &Seq<S>,
    g2: &Seq<S>,
    m: &[usize],
    tol: f64,
) -> Result<Stabilized> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Precondition(format!(
            "stabilization tolerance must be positive, got {tol}"
        )));
    }
    if g1.len() != g2.len() {
        return Err(Error::LengthMismatch {
            left: g1.len(),
            right: g2.len(),
        });
    }
    if !m.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Precondition("indices must be strictly increasing".into()));
    }
    if let Some(&bad) = m.iter().find(|&&j| j == 0 || j > g1.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: g1.len(),
        });
    }
    if m.len() < MIN_STABLE {
        return Err(Error::InsufficientStabilization(format!(
            "{} indices, need at least {MIN_STABLE}",
            m.len()
        )));
    }
    let cand = &m[2..];
    let v1: Vec<f64> = cand.iter().map(|&j| g1.at(j).to_f64()).collect();
    let (key1, first) = fullest(&v1, cand, tol);
    let v2: Vec<f64> = first.iter().map(|&j| g2.at(j).to_f64()).collect();
    let (key2, indices) = fullest(&v2, &first, tol);
    if indices.len() < MIN_STABLE {
        return Err(Error::InsufficientStabilization(format!(
            "fullest bucket holds {} of {} indices at tolerance {tol:e}",
            indices.len(),
            cand.len()
        )));
    }
    Ok(Stabilized {
        indices,
        key1,
        key2,
        l1: key1 as f64 * tol,
        l2: key2 as f64 * tol,
    })
}
