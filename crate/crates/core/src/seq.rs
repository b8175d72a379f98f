//! Truncated sequences and the norms of ℓ_p, ℓ∞ and c₀.
//!
//! A [`Seq`] stores the first `T` coordinates of a sequence together with an
//! upper bound on the norm of the discarded tail. Indices in the public API
//! are 1-based, matching the usual coordinate notation `x(j)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{max_abs, pow_u32, Rational, Scalar};

/// Which norm governs the ambient space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmbientSpace {
    Lp(f64),
    LInfty,
    C0,
}

impl AmbientSpace {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::Config(format!("p must satisfy 1 <= p < inf, got {p}")));
        }
        Ok(AmbientSpace::Lp(p))
    }

    pub fn is_sup(&self) -> bool {
        !matches!(self, AmbientSpace::Lp(_))
    }

    /// Finite exponent, if any.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            AmbientSpace::Lp(p) => Some(*p),
            _ => None,
        }
    }

    /// Integer exponent for exact p-th power comparisons.
    pub fn integer_exponent(&self) -> Option<u32> {
        match self {
            AmbientSpace::Lp(p) if p.fract() == 0.0 && *p <= u32::MAX as f64 => Some(*p as u32),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            AmbientSpace::Lp(p) => format!("l{p}"),
            AmbientSpace::LInfty => "linf".into(),
            AmbientSpace::C0 => "c0".into(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AmbientSpace::Lp(p) => json!({"kind": "lp", "p": p}),
            AmbientSpace::LInfty => json!({"kind": "linf"}),
            AmbientSpace::C0 => json!({"kind": "c0"}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("space.kind missing".into()))?;
        match kind {
            "lp" => {
                let p = v
                    .get("p")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::Parse("space.p missing".into()))?;
                AmbientSpace::lp(p)
            }
            "linf" => Ok(AmbientSpace::LInfty),
            "c0" => Ok(AmbientSpace::C0),
            other => Err(Error::Parse(format!("unknown space kind {other:?}"))),
        }
    }
}

impl Serialize for AmbientSpace {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AmbientSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        AmbientSpace::from_json(&v).map_err(D::Error::custom)
    }
}

/// A truncated sequence: coordinates `x(1..=T)` plus a bound on the norm of
/// everything beyond `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq<S> {
    coords: Vec<S>,
    tail_bound: f64,
}

impl<S: Scalar> Seq<S> {
    pub fn new(coords: Vec<S>, tail_bound: f64) -> Result<Self> {
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(Error::Precondition(format!(
                "tail bound must be finite and nonnegative, got {tail_bound}"
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: i + 1 });
        }
        Ok(Seq { coords, tail_bound })
    }

    /// Finitely supported sequence (tail bound 0).
    pub fn finite(coords: Vec<S>) -> Self {
        Seq {
            coords,
            tail_bound: 0.0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Seq::finite(vec![S::zero(); len])
    }

    /// The `j`-th unit vector (1-based).
    pub fn unit(j: usize, len: usize) -> Result<Self> {
        check_index(j, len)?;
        let mut coords = vec![S::zero(); len];
        coords[j - 1] = S::one();
        Ok(Seq::finite(coords))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn with_tail_bound(mut self, tail_bound: f64) -> Self {
        self.tail_bound = tail_bound;
        self
    }

    pub fn is_exact(&self) -> bool {
        S::EXACT
    }

    /// Coordinate `x(j)`, 1-based.
    pub fn at(&self, j: usize) -> &S {
        &self.coords[j - 1]
    }

    pub fn get(&self, j: usize) -> Result<&S> {
        check_index(j, self.len())?;
        Ok(&self.coords[j - 1])
    }

    pub fn set(&mut self, j: usize, value: S) {
        self.coords[j - 1] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn to_f64(&self) -> Seq<f64> {
        Seq {
            coords: self.coords.iter().map(Scalar::to_f64).collect(),
            tail_bound: self.tail_bound,
        }
    }

    pub fn scale(&self, a: &S) -> Self {
        Seq {
            coords: self.coords.iter().map(|c| c.clone() * a.clone()).collect(),
            tail_bound: self.tail_bound * a.to_f64().abs(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
            .map(|s| s.with_tail_bound(self.tail_bound + other.tail_bound))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
            .map(|s| s.with_tail_bound(self.tail_bound + other.tail_bound))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: &S, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x.clone() + a.clone() * y.clone())
            .map(|s| s.with_tail_bound(self.tail_bound + a.to_f64().abs() * other.tail_bound))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        check_lengths(self.len(), other.len())?;
        Ok(Seq::finite(
            self.coords.iter().zip(&other.coords).map(|(a, b)| f(a, b)).collect(),
        ))
    }

    /// Keeps coordinates in `lo..=hi` (1-based) and zeroes the rest.
    pub fn window(&self, lo: usize, hi: usize) -> Self {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if (lo..=hi).contains(&(i + 1)) {
                    c.clone()
                } else {
                    S::zero()
                }
            })
            .collect();
        Seq::finite(coords)
    }

    /// Exact supremum of `|x(j)|` over the truncation.
    pub fn sup_abs(&self) -> S {
        max_abs(&self.coords)
    }

    /// Exact `Σ |x(j)|^p` over the truncation.
    pub fn pow_sum(&self, p: u32) -> S {
        self.coords.iter().fold(S::zero(), |acc, c| acc + pow_u32(&c.abs(), p))
    }

    /// Norm over the truncation (the tail bound is not included).
    pub fn norm(&self, space: &AmbientSpace) -> Result<f64> {
        norm(self, space)
    }

    /// Exact norm when it is rational (ℓ₁ and the sup norms).
    pub fn exact_norm(&self, space: &AmbientSpace) -> Result<S> {
        match space {
            AmbientSpace::Lp(p) if *p == 1.0 => Ok(self.pow_sum(1)),
            AmbientSpace::Lp(_) if S::EXACT => Err(Error::InexactNorm(space.name())),
            AmbientSpace::Lp(_) => Ok(S::from_f64(self.norm(space)?)),
            AmbientSpace::LInfty | AmbientSpace::C0 => Ok(self.sup_abs()),
        }
    }

    /// `x / |x|`, exactly where the norm is rational.
    pub fn normalized(&self, space: &AmbientSpace) -> Result<Self> {
        let n = self.exact_norm(space)?;
        if n.is_zero() {
            return Err(Error::ZeroVector);
        }
        let inv = S::one() / n;
        Ok(self.scale(&inv))
    }
}

impl Seq<Rational> {
    pub fn from_rationals(coords: Vec<Rational>) -> Self {
        Seq::finite(coords)
    }
}

pub(crate) fn check_index(j: usize, len: usize) -> Result<()> {
    if j == 0 || j > len {
        Err(Error::IndexOutOfRange { index: j, len })
    } else {
        Ok(())
    }
}

pub(crate) fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::LengthMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

fn check_finite<S: Scalar>(x: &Seq<S>) -> Result<()> {
    match x.coords.iter().position(|c| !c.is_finite()) {
        Some(i) => Err(Error::NonFiniteCoordinate { index: i + 1 }),
        None => Ok(()),
    }
}

/// p-norm of raw doubles, scaled by the largest entry to avoid overflow.
pub(crate) fn lp_norm_f64(xs: impl Iterator<Item = f64> + Clone, p: f64) -> f64 {
    let m = xs.clone().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return xs.map(f64::abs).sum();
    }
    let s: f64 = xs.map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Norm of the truncation: `(Σ|x(j)|^p)^{1/p}` for ℓ_p, `max|x(j)|` for the
/// sup-norm spaces.
pub fn norm<S: Scalar>(x: &Seq<S>, space: &AmbientSpace) -> Result<f64> {
    check_finite(x)?;
    Ok(match space {
        AmbientSpace::Lp(p) => lp_norm_f64(x.coords.iter().map(Scalar::to_f64), *p),
        AmbientSpace::LInfty | AmbientSpace::C0 => x.sup_abs().to_f64(),
    })
}

/// Coordinatewise product.
pub fn hadamard<S: Scalar>(x: &Seq<S>, y: &Seq<S>) -> Result<Seq<S>> {
    check_lengths(x.len(), y.len())?;
    let coords = x.coords.iter().zip(&y.coords).map(|(a, b)| a.mul_ref(b)).collect();
    // The discarded part of x⊙y only involves discarded coordinates of both.
    Ok(Seq {
        coords,
        tail_bound: x.tail_bound * y.tail_bound,
    })
}

/// Upper bound on the norm of `(x(n+1), x(n+2), …)` including the discarded
/// tail: `(Σ_{n<j≤T}|x(j)|^p + tail^p)^{1/p}` for ℓ_p and
/// `max(max_{n<j≤T}|x(j)|, tail)` for the sup norms.
pub fn tail_norm<S: Scalar>(x: &Seq<S>, n: usize, space: &AmbientSpace) -> Result<f64> {
    check_index(n, x.len())?;
    check_finite(x)?;
    let rest = x.coords[n..].iter().map(Scalar::to_f64);
    Ok(match space {
        AmbientSpace::Lp(p) => {
            let tb = x.tail_bound;
            let chained = rest.chain(std::iter::once(tb));
            lp_norm_f64(chained, *p)
        }
        AmbientSpace::LInfty | AmbientSpace::C0 => rest.fold(x.tail_bound, |m, c| m.max(c.abs())),
    })
}

/// Upper bound on the full norm, discarded tail included.
pub fn full_norm<S: Scalar>(x: &Seq<S>, space: &AmbientSpace) -> Result<f64> {
    let head = norm(x, space)?;
    Ok(combine_tail(head, x.tail_bound, space))
}

/// Merges a truncated norm with a tail bound.
pub fn combine_tail(head: f64, tail: f64, space: &AmbientSpace) -> f64 {
    match space {
        AmbientSpace::Lp(p) => lp_norm_f64([head, tail].into_iter(), *p),
        AmbientSpace::LInfty | AmbientSpace::C0 => head.max(tail),
    }
}

/// Coordinatewise `Σ_i |x_i|`, with the tail bounds added.
pub fn abs_sum<S: Scalar>(xs: &[Seq<S>]) -> Result<Seq<S>> {
    let len = xs.first().map_or(0, Seq::len);
    let mut coords = vec![S::zero(); len];
    let mut tail = 0.0;
    for x in xs {
        check_lengths(len, x.len())?;
        for (c, v) in coords.iter_mut().zip(x.coords()) {
            *c = c.clone() + v.abs();
        }
        tail += x.tail_bound();
    }
    Seq::new(coords, tail)
}

/// Tail norms `tail_norm(x, n)` for every `n` in `0..=T`, from suffix sums.
/// Cheaper than repeated calls; callers confirm candidates with
/// [`tail_norm`].
pub(crate) fn tail_profile<S: Scalar>(x: &Seq<S>, space: &AmbientSpace) -> Vec<f64> {
    let t = x.len();
    let mut out = vec![0.0; t + 1];
    match space {
        AmbientSpace::Lp(p) => {
            let p = *p;
            let mut acc = x.tail_bound.powf(p);
            out[t] = x.tail_bound;
            for n in (0..t).rev() {
                acc += x.coords[n].to_f64().abs().powf(p);
                out[n] = acc.powf(1.0 / p);
            }
        }
        AmbientSpace::LInfty | AmbientSpace::C0 => {
            let mut acc = x.tail_bound;
            out[t] = acc;
            for n in (0..t).rev() {
                acc = acc.max(x.coords[n].to_f64().abs());
                out[n] = acc;
            }
        }
    }
    out
}

impl<S: Scalar> Serialize for Seq<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let coords: Vec<Value> = self.coords.iter().map(Scalar::to_json).collect();
        json!({"coords": coords, "tail_bound": self.tail_bound}).serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Seq<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let coords = v
            .get("coords")
            .and_then(Value::as_array)
            .ok_or_else(|| D::Error::custom("seq.coords missing"))?
            .iter()
            .map(S::from_json)
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let tail_bound = v.get("tail_bound").and_then(Value::as_f64).unwrap_or(0.0);
        Seq::new(coords, tail_bound).map_err(D::Error::custom)
    }
}
