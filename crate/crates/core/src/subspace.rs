//! Finite-dimensional stand-ins for closed subspaces of a sequence space.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{combine, nullspace, rref_partial};
use crate::scalar::{parse_rational, rational_to_f64, upper_f64, Rational, Scalar};
use crate::seq::{check_index, norm, AmbientSpace, Seq};
use num_traits::{One, Signed};

/// Default zero/residual tolerance in float mode.
pub const DEFAULT_ETA: f64 = 1e-9;

/// The span of a finite family of truncated sequences, kept in reduced row
/// echelon form.
#[derive(Debug, Clone)]
pub struct Subspace<S> {
    space: AmbientSpace,
    truncation: usize,
    generators: Vec<Seq<S>>,
    basis: Vec<Seq<S>>,
    /// 1-based pivot coordinate of each basis row.
    pivots: Vec<usize>,
    eta: f64,
}

impl<S: Scalar> Subspace<S> {
    pub fn new(space: AmbientSpace, generators: Vec<Seq<S>>, eta: f64) -> Result<Self> {
        let truncation = generators.first().map_or(0, Seq::len);
        if let Some(g) = generators.iter().find(|g| g.len() != truncation) {
            return Err(Error::LengthMismatch {
                left: truncation,
                right: g.len(),
            });
        }
        let ngen = generators.len();
        // Augment with the identity to track which combination produced each
        // reduced row; the tail bound of a row follows from it.
        let rows = generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut row = g.coords().to_vec();
                row.extend((0..ngen).map(|j| if i == j { S::one() } else { S::zero() }));
                row
            })
            .collect();
        let ech = rref_partial(rows, truncation, eta);
        let basis = ech
            .rows
            .into_iter()
            .map(|row| {
                let tail: f64 = row[truncation..]
                    .iter()
                    .zip(&generators)
                    .map(|(c, g)| c.to_f64().abs() * g.tail_bound())
                    .sum();
                let mut coords = row;
                coords.truncate(truncation);
                Seq::new(coords, tail)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Subspace {
            space,
            truncation,
            generators,
            basis,
            pivots: ech.pivots.iter().map(|p| p + 1).collect(),
            eta,
        })
    }

    pub fn space(&self) -> AmbientSpace {
        self.space
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn generators(&self) -> &[Seq<S>] {
        &self.generators
    }

    /// Reduced basis rows; row `i` has a leading 1 at `pivots()[i]`.
    pub fn basis(&self) -> &[Seq<S>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `Σ_i c_i g_i` over the generators.
    pub fn combine_generators(&self, coeffs: &[S]) -> Result<Seq<S>> {
        if coeffs.len() != self.generators.len() {
            return Err(Error::LengthMismatch {
                left: coeffs.len(),
                right: self.generators.len(),
            });
        }
        let rows: Vec<Vec<S>> = self.generators.iter().map(|g| g.coords().to_vec()).collect();
        let tail = coeffs
            .iter()
            .zip(&self.generators)
            .map(|(c, g)| c.to_f64().abs() * g.tail_bound())
            .sum();
        Seq::new(combine(coeffs, &rows, self.truncation), tail)
    }

    /// Distance (ambient norm over the truncation) from `f` to its
    /// reconstruction from the pivot coordinates.
    pub fn membership_residual(&self, f: &Seq<S>) -> Result<f64> {
        if f.len() != self.truncation {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: self.truncation,
            });
        }
        let coeffs: Vec<S> = self.pivots.iter().map(|&p| f.at(p).clone()).collect();
        let rows: Vec<Vec<S>> = self.basis.iter().map(|b| b.coords().to_vec()).collect();
        let recon = Seq::finite(combine(&coeffs, &rows, self.truncation));
        norm(&f.sub(&recon)?, &self.space)
    }

    /// A unit vector of the span vanishing on coordinates `1..=n`.
    ///
    /// This is the first reduced row whose pivot lies beyond `n`, normalized.
    /// It is the solution of the prefix system with the first free variable
    /// set to 1 and the remaining free variables set to 0.
    pub fn vanish_on_prefix(&self, n: usize) -> Result<Seq<S>> {
        let row = self
            .pivots
            .iter()
            .position(|&p| p > n)
            .ok_or(Error::DimensionExhausted {
                prefix: n,
                dim: self.dim(),
            })?;
        let mut f = self.basis[row].normalized(&self.space)?;
        for j in 1..=n.min(self.truncation) {
            f.set(j, S::zero());
        }
        Ok(f)
    }

    /// Coefficient space of the elements vanishing at every coordinate in
    /// `coords`, returned as reduced rows of the ambient truncation.
    pub fn vanishing_on(&self, coords: &[usize]) -> Result<Vec<Seq<S>>> {
        for &c in coords {
            check_index(c, self.truncation)?;
        }
        let d = self.dim();
        let constraints: Vec<Vec<S>> = coords
            .iter()
            .map(|&c| self.basis.iter().map(|b| b.at(c).clone()).collect())
            .collect();
        let kernel = nullspace(constraints, d, self.eta);
        let rows: Vec<Vec<S>> = self.basis.iter().map(|b| b.coords().to_vec()).collect();
        let spanning: Vec<Vec<S>> = kernel.iter().map(|z| combine(z, &rows, self.truncation)).collect();
        if spanning.is_empty() {
            return Ok(Vec::new());
        }
        let ech = rref_partial(spanning, self.truncation, self.eta);
        ech.rows
            .into_iter()
            .map(|mut r| {
                for &c in coords {
                    r[c - 1] = S::zero();
                }
                Ok(Seq::finite(r))
            })
            .collect()
    }
}

/// One generator in a fixture file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Dense {
        coords: Vec<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_bound: Option<f64>,
    },
    /// `scale · ratio^{n − start + 1}` for `n >= start`, zero before.
    Geometric {
        ratio: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<usize>,
    },
    Unit {
        index: usize,
    },
}

/// A subspace description as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Fixture {
    pub space: AmbientSpace,
    pub truncation: usize,
    pub generators: Vec<GeneratorSpec>,
}

pub(crate) fn value_to_rational(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!("expected a number or \"num/den\", got {other}"))),
    }
}

/// `x_p = (p, p², …, p^T)` with a certified bound on the discarded tail.
pub fn geometric_seq(ratio: &Rational, scale: &Rational, t: usize, space: &AmbientSpace) -> Result<Seq<Rational>> {
    shifted_geometric_seq(ratio, scale, 1, t, space)
}

/// `scale · p^{n − start + 1}` from `n = start` on. The tail bound is the
/// ℓ1 (or sup) norm of the discarded coordinates, which dominates every
/// `p`-norm, and is always computed exactly. Float coordinates are evaluated
/// in floating point directly, since exact powers of long truncations are
/// costly.
pub fn shifted_geometric_seq<S: Scalar>(
    ratio: &Rational,
    scale: &Rational,
    start: usize,
    t: usize,
    space: &AmbientSpace,
) -> Result<Seq<S>> {
    if !(ratio.is_positive() && ratio < &Rational::one()) {
        return Err(Error::RatioOutOfRange(crate::scalar::format_rational(ratio)));
    }
    if start == 0 {
        return Err(Error::IndexOutOfRange { index: 0, len: t });
    }
    let mut coords = vec![S::zero(); t];
    if S::EXACT {
        // a^k / b^k stays in lowest terms, so only the scale needs a gcd.
        let (a, b) = (ratio.numer(), ratio.denom());
        let (mut num, mut den) = (a.clone(), b.clone());
        for c in coords.iter_mut().skip(start - 1) {
            let power = Rational::new_raw(num.clone(), den.clone());
            *c = S::from_rational(&if scale.is_one() { power } else { scale * power });
            num *= a;
            den *= b;
        }
    } else {
        let (r, a) = (rational_to_f64(ratio), rational_to_f64(scale));
        for (k, c) in coords.iter_mut().skip(start - 1).enumerate() {
            *c = S::from_f64(a * r.powi(k as i32 + 1));
        }
    }
    // First discarded coordinate is max(T + 1, start).
    let power = num_traits::pow(ratio.clone(), (t + 1).max(start) - start + 1);
    let tail = match space {
        AmbientSpace::Lp(_) => power / (Rational::one() - ratio),
        AmbientSpace::LInfty | AmbientSpace::C0 => power,
    };
    Seq::new(coords, upper_f64(&(tail * scale.abs())))
}

impl Fixture {
    pub fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("fixture: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("fixture: {e}")))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("fixture serializes")
    }

    /// Materializes every generator as a truncated sequence.
    pub fn sequences<S: Scalar>(&self) -> Result<Vec<Seq<S>>> {
        let t = self.truncation;
        if t == 0 {
            return Err(Error::Config("truncation must be at least 1".into()));
        }
        self.generators
            .iter()
            .map(|g| match g {
                GeneratorSpec::Dense { coords, tail_bound } => {
                    if coords.len() > t {
                        return Err(Error::LengthMismatch {
                            left: coords.len(),
                            right: t,
                        });
                    }
                    let mut xs = coords
                        .iter()
                        .map(|c| value_to_rational(c).map(|q| S::from_rational(&q)))
                        .collect::<Result<Vec<S>>>()?;
                    xs.resize(t, S::zero());
                    Seq::new(xs, tail_bound.unwrap_or(0.0))
                }
                GeneratorSpec::Geometric { ratio, scale, start } => {
                    let p = value_to_rational(ratio)?;
                    let a = match scale {
                        Some(s) => value_to_rational(s)?,
                        None => Rational::one(),
                    };
                    shifted_geometric_seq(&p, &a, start.unwrap_or(1), t, &self.space)
                }
                GeneratorSpec::Unit { index } => Seq::unit(*index, t),
            })
            .collect()
    }

    pub fn subspace<S: Scalar>(&self, eta: f64) -> Result<Subspace<S>> {
        Subspace::new(self.space, self.sequences()?, eta)
    }
}

/// Convenience for tests and callers: the span of unit vectors `e_j`.
pub fn coordinate_fixture(space: AmbientSpace, truncation: usize, indices: impl IntoIterator<Item = usize>) -> Fixture {
    Fixture {
        space,
        truncation,
        generators: indices.into_iter().map(|index| GeneratorSpec::Unit { index }).collect(),
    }
}
