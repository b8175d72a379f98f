//! Geometric sequences `x_p = (p, p², p³, …)` and their finite combinations.
//!
//! A nonzero combination `Σ λ_i x_{p_i}` has only finitely many zero
//! coordinates. [`certified_zero_bound`] turns that into a concrete index `M`
//! past which no coordinate can vanish.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::linalg;
use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational};
use crate::seq::{AmbientSpace, Seq};
use crate::subspace::geometric_seq;

/// `x_p` truncated to `t` coordinates, exact.
pub fn geometric_generator(p: &Rational, t: usize, space: &AmbientSpace) -> Result<Seq<Rational>> {
    geometric_seq(p, &Rational::one(), t, space)
}

fn check_ratio(p: &Rational) -> Result<()> {
    if p.is_positive() && p < &Rational::one() {
        Ok(())
    } else {
        Err(Error::RatioOutOfRange(format_rational(p)))
    }
}

/// `Σ λ_i x_{p_i}` with `0 < p_1 < … < p_N < 1` and every `λ_i ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricCombination {
    ratios: Vec<Rational>,
    coeffs: Vec<Rational>,
}

impl GeometricCombination {
    /// Sorts the terms by ratio and validates them.
    pub fn new(ratios: Vec<Rational>, coeffs: Vec<Rational>) -> Result<Self> {
        if ratios.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                left: ratios.len(),
                right: coeffs.len(),
            });
        }
        if ratios.is_empty() {
            return Err(Error::Precondition("a combination needs at least one term".into()));
        }
        let mut terms: Vec<(Rational, Rational)> = ratios.into_iter().zip(coeffs).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        for (p, l) in &terms {
            check_ratio(p)?;
            if l.is_zero() {
                return Err(Error::Precondition(format!(
                    "coefficient of x_{} is zero",
                    format_rational(p)
                )));
            }
        }
        if let Some(w) = terms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateRatio(format_rational(&w[0].0)));
        }
        let (ratios, coeffs) = terms.into_iter().unzip();
        Ok(GeometricCombination { ratios, coeffs })
    }

    pub fn ratios(&self) -> &[Rational] {
        &self.ratios
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// Per-term integer numerators of `λ_i p_i^j` over the common
    /// denominator `D_j = Π den(λ) · (Π den(p))^j`, for `j = 1..=t`.
    fn scaled_terms(&self, t: usize) -> impl Iterator<Item = Vec<BigInt>> + '_ {
        let v: BigInt = self.coeffs.iter().map(|c| c.denom().clone()).product();
        let b: BigInt = self.ratios.iter().map(|p| p.denom().clone()).product();
        let steps: Vec<BigInt> = self.ratios.iter().map(|p| p.numer() * (&b / p.denom())).collect();
        let mut terms: Vec<BigInt> = self.coeffs.iter().map(|c| c.numer() * (&v / c.denom())).collect();
        let mut den = v;
        (0..t).map(move |_| {
            for (x, s) in terms.iter_mut().zip(&steps) {
                *x *= s;
            }
            den *= &b;
            let mut out = terms.clone();
            out.push(den.clone());
            out
        })
    }

    /// Coordinates `x(1..=t)` of the combination, exact.
    pub fn coords(&self, t: usize) -> Vec<Rational> {
        self.scaled_terms(t)
            .map(|mut row| {
                let den = row.pop().unwrap_or_else(BigInt::one);
                Rational::new(row.into_iter().sum(), den)
            })
            .collect()
    }

    /// Indices `j <= scan` with `x(j) = 0`.
    pub fn zero_set(&self, scan: usize) -> Vec<usize> {
        self.scaled_terms(scan)
            .enumerate()
            .filter(|(_, row)| row[..row.len() - 1].iter().sum::<BigInt>().is_zero())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `|Σ_{i<N} λ_i p_i^j| < |λ_N| p_N^j` for `j = 1..=upto`.
    fn dominance_profile(&self, upto: usize) -> Vec<bool> {
        let n = self.len();
        self.scaled_terms(upto)
            .map(|row| row[..n - 1].iter().sum::<BigInt>().abs() < row[n - 1].abs())
            .collect()
    }

    /// `Σ_{i<N} |λ_i| · (p_{N−1}/p_N)^j < |λ_N|`, exactly.
    fn envelope_holds(&self, j: usize) -> bool {
        let n = self.len();
        let s: Rational = self.coeffs[..n - 1].iter().map(Signed::abs).sum();
        let r = &self.ratios[n - 2] / &self.ratios[n - 1];
        s * num_traits::pow(r, j) < self.coeffs[n - 1].abs()
    }

    /// Least `j >= 1` at which the envelope inequality holds. It then holds
    /// for every larger `j` because the envelope is decreasing.
    pub fn envelope_index(&self) -> usize {
        let n = self.len();
        if n == 1 {
            return 1;
        }
        let s: Rational = self.coeffs[..n - 1].iter().map(Signed::abs).sum();
        let lead = self.coeffs[n - 1].abs();
        let r = &self.ratios[n - 2] / &self.ratios[n - 1];
        let estimate = (rational_to_f64(&s) / rational_to_f64(&lead)).ln() / (1.0 / rational_to_f64(&r)).ln();
        let mut j = if estimate.is_finite() && estimate > 1.0 {
            estimate.ceil() as usize
        } else {
            1
        };
        while !self.envelope_holds(j) {
            j += 1;
        }
        while j > 1 && self.envelope_holds(j - 1) {
            j -= 1;
        }
        j
    }
}

/// Envelope index and the certified bound derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroBound {
    /// Every coordinate `j > bound` is nonzero.
    pub bound: usize,
    /// Least index from which the envelope inequality holds.
    pub envelope: usize,
}

/// Least `M` such that the last term dominates every coordinate `j > M`,
/// which forces `x(j) ≠ 0` there.
pub fn certified_zero_bound(c: &GeometricCombination) -> ZeroBound {
    if c.len() == 1 {
        return ZeroBound { bound: 0, envelope: 1 };
    }
    let envelope = c.envelope_index();
    let profile = c.dominance_profile(envelope.saturating_sub(1));
    let bound = profile.iter().rposition(|&ok| !ok).map_or(0, |i| i + 1);
    ZeroBound { bound, envelope }
}

/// Rank of the `#ratios × t` matrix `[p_i^j]`, computed exactly.
pub fn independence_rank(ratios: &[Rational], t: usize) -> Result<usize> {
    for p in ratios {
        check_ratio(p)?;
    }
    let mut sorted: Vec<&Rational> = ratios.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateRatio(format_rational(w[0])));
    }
    let rows: Vec<Vec<Rational>> = ratios
        .iter()
        .map(|p| {
            let mut pw = p.clone();
            (0..t)
                .map(|_| {
                    let x = pw.clone();
                    pw *= p;
                    x
                })
                .collect()
        })
        .collect();
    Ok(linalg::rank(rows, 0.0))
}

/// Certificate for one combination: its zero set within the scan, the
/// certified bound and the rank of the ratio family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineabilityCert {
    pub ratios: Vec<String>,
    pub coeffs: Vec<String>,
    pub zero_set: Vec<usize>,
    pub certified_bound: usize,
    pub envelope_index: usize,
    pub rank: usize,
    pub scan_length: usize,
    pub ledger: Ledger,
}

impl LineabilityCert {
    pub fn build(c: &GeometricCombination, scan: usize) -> Result<Self> {
        let zb = certified_zero_bound(c);
        let mut cert = LineabilityCert {
            ratios: c.ratios().iter().map(format_rational).collect(),
            coeffs: c.coeffs().iter().map(format_rational).collect(),
            zero_set: c.zero_set(scan),
            certified_bound: zb.bound,
            envelope_index: zb.envelope,
            rank: independence_rank(c.ratios(), c.len())?,
            scan_length: scan,
            ledger: Ledger::new(),
        };
        cert.ledger = cert.audit()?;
        Ok(cert)
    }

    pub fn combination(&self) -> Result<GeometricCombination> {
        let parse = |xs: &[String]| xs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        GeometricCombination::new(parse(&self.ratios)?, parse(&self.coeffs)?)
    }

    /// Recomputes every claim from the stored ratios and coefficients.
    pub fn audit(&self) -> Result<Ledger> {
        let c = self.combination()?;
        let mut l = Ledger::new();
        let zeros = c.zero_set(self.scan_length);
        l.push_flag("zero_set_matches", &[], zeros == self.zero_set);
        let last_zero = zeros.last().copied().unwrap_or(0);
        l.push(
            "zeros_within_bound",
            &[],
            last_zero as f64,
            Relation::Le,
            self.certified_bound as f64,
            0.0,
        );
        l.push(
            "zero_count",
            &[],
            zeros.len() as f64,
            Relation::Le,
            self.certified_bound as f64,
            0.0,
        );
        if c.len() > 1 {
            l.push_flag(
                "envelope_holds",
                &[self.envelope_index],
                c.envelope_holds(self.envelope_index),
            );
            let upto = self.envelope_index.saturating_sub(1);
            let profile = c.dominance_profile(upto);
            let dominated = profile.iter().enumerate().skip(self.certified_bound).all(|(_, &ok)| ok);
            l.push_flag("dominance_beyond_bound", &[self.certified_bound], dominated);
        }
        let rank = independence_rank(c.ratios(), c.len())?;
        l.push_flag("rank_matches", &[], rank == self.rank);
        l.push("full_rank", &[], rank as f64, Relation::Ge, c.len() as f64, 0.0);
        Ok(l)
    }
}
