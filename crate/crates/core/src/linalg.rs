//! Row reduction over any [`Scalar`] field.
//!
//! Exact rationals use exact zero tests. Doubles use partial pivoting with a
//! threshold relative to the largest entry of the input.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reduced row echelon form of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Echelon<S> {
    /// Nonzero reduced rows, each with a leading 1 at its pivot column.
    pub rows: Vec<Vec<S>>,
    /// Pivot column (0-based) of each row, strictly increasing.
    pub pivots: Vec<usize>,
}

impl<S: Scalar> Echelon<S> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn zero_threshold<S: Scalar>(rows: &[Vec<S>], cols: usize, eta: f64) -> f64 {
    let scale = rows
        .iter()
        .flat_map(|r| r[..cols].iter())
        .fold(0.0f64, |m, x| m.max(x.to_f64().abs()));
    eta * scale.max(f64::MIN_POSITIVE)
}

/// Row-reduces `rows`, choosing pivots only among the first `pivot_cols`
/// columns. Trailing columns ride along, which lets callers track the
/// combination that produced each reduced row.
pub fn rref_partial<S: Scalar>(mut rows: Vec<Vec<S>>, pivot_cols: usize, eta: f64) -> Echelon<S> {
    let width = rows.first().map_or(0, Vec::len);
    debug_assert!(rows.iter().all(|r| r.len() == width));
    let pivot_cols = pivot_cols.min(width);
    let tol = zero_threshold(&rows, pivot_cols, eta);
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..pivot_cols {
        if rank == rows.len() {
            break;
        }
        let best = (rank..rows.len())
            .filter(|&r| !rows[r][c].is_negligible(tol))
            .max_by(|&a, &b| {
                rows[a][c]
                    .abs()
                    .partial_cmp(&rows[b][c].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    // prefer the earlier row on ties
                    .then(b.cmp(&a))
            });
        let Some(p) = best else {
            for row in rows.iter_mut().skip(rank) {
                row[c] = S::zero();
            }
            continue;
        };
        rows.swap(rank, p);
        let inv = S::one() / rows[rank][c].clone();
        for x in rows[rank].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        rows[rank][c] = S::one();
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = x.clone() - factor.clone() * y.clone();
            }
            row[c] = S::zero();
            if !S::EXACT {
                for x in row[..pivot_cols].iter_mut() {
                    if x.is_negligible(tol) {
                        *x = S::zero();
                    }
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    rows.truncate(rank);
    Echelon { rows, pivots }
}

pub fn rref<S: Scalar>(rows: Vec<Vec<S>>, eta: f64) -> Echelon<S> {
    let cols = rows.first().map_or(0, Vec::len);
    rref_partial(rows, cols, eta)
}

pub fn rank<S: Scalar>(rows: Vec<Vec<S>>, eta: f64) -> usize {
    rref(rows, eta).rank()
}

/// Basis of `{x : A x = 0}` for an `m × n` matrix given by rows. One vector
/// per free column, in increasing column order, with that free variable set
/// to 1 and the other free variables set to 0.
pub fn nullspace<S: Scalar>(rows: Vec<Vec<S>>, ncols: usize, eta: f64) -> Vec<Vec<S>> {
    if rows.is_empty() {
        return (0..ncols)
            .map(|j| {
                let mut v = vec![S::zero(); ncols];
                v[j] = S::one();
                v
            })
            .collect();
    }
    let ech = rref(rows, eta);
    let mut is_pivot = vec![false; ncols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    (0..ncols)
        .filter(|&j| !is_pivot[j])
        .map(|free| {
            let mut v = vec![S::zero(); ncols];
            v[free] = S::one();
            for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                v[p] = -row[free].clone();
            }
            v
        })
        .collect()
}

/// Inverse of a square matrix.
pub fn inverse<S: Scalar>(m: &[Vec<S>], eta: f64) -> Result<Vec<Vec<S>>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::Precondition("inverse of a non-square matrix".into()));
    }
    let augmented = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            row
        })
        .collect();
    let ech = rref_partial(augmented, n, eta);
    if ech.rank() < n {
        return Err(Error::Precondition("singular matrix".into()));
    }
    Ok(ech.rows.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec<S: Scalar>(m: &[Vec<S>], x: &[S]) -> Vec<S> {
    m.iter().map(|row| dot(row, x)).collect()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// `Σ_i c_i rows_i`.
pub fn combine<S: Scalar>(coeffs: &[S], rows: &[Vec<S>], len: usize) -> Vec<S> {
    let mut out = vec![S::zero(); len];
    for (c, row) in coeffs.iter().zip(rows) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(row) {
            *o = o.clone() + c.clone() * x.clone();
        }
    }
    out
}
