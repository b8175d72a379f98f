//! Scalar fields used for coordinates: `f64` and exact rationals.

use std::fmt::Debug;
use std::str::FromStr;

use dashu_int::ops::Gcd;
use dashu_int::UBig;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Coordinate field. `f64` is the float mode, [`Rational`] the exact mode.
pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static {
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Self;

    fn from_rational(q: &Rational) -> Self;

    /// Zero test: exact equality for rationals, `|x| <= eta` for floats.
    fn is_negligible(&self, eta: f64) -> bool;

    fn is_finite(&self) -> bool;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    /// `self · other` without consuming either side.
    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }

    fn mode_name() -> &'static str {
        if Self::EXACT {
            "exact"
        } else {
            "float"
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn is_negligible(&self, eta: f64) -> bool {
        self.abs() <= eta
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn to_json(&self) -> Value {
        Value::from(*self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            Value::String(s) => Ok(rational_to_f64(&parse_rational(s)?)),
            other => Err(Error::Parse(format!("expected a number, got {other}"))),
        }
    }
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let to = |x: &BigInt| UBig::from_le_bytes(&x.magnitude().to_bytes_le());
    let g = Gcd::gcd(&to(a), &to(b));
    BigInt::from(BigUint::from_bytes_le(&g.to_le_bytes()))
}

/// Product in lowest terms, cancelling crosswise first so the gcds run on
/// the factors rather than on the product.
pub fn mul_rational(x: &Rational, y: &Rational) -> Rational {
    let g1 = gcd(x.numer(), y.denom());
    let g2 = gcd(y.numer(), x.denom());
    Rational::new_raw(
        (x.numer() / &g1) * (y.numer() / &g2),
        (x.denom() / &g2) * (y.denom() / &g1),
    )
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite double")
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn is_negligible(&self, _eta: f64) -> bool {
        self.is_zero()
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn mul_ref(&self, other: &Self) -> Self {
        mul_rational(self, other)
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => parse_rational(&n.to_string()),
            other => Err(Error::Parse(format!("expected a rational, got {other}"))),
        }
    }
}

/// Converts a rational to the nearest double, staying finite for huge
/// numerators and denominators.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let Some(x) = ToPrimitive::to_f64(q) {
        if x.is_finite() && (x != 0.0 || q.is_zero()) {
            return x;
        }
    }
    // Fall back on a scaled quotient of the leading bits.
    let num = q.numer();
    let den = q.denom();
    let shift = num.bits() as i64 - den.bits() as i64;
    let target = 60i64;
    let scaled = if shift < target {
        (num << ((target - shift) as usize)) / den
    } else {
        num / (den << ((shift - target) as usize))
    };
    let mantissa = scaled.to_f64().unwrap_or(0.0);
    mantissa * 2f64.powi((shift - target) as i32)
}

/// Smallest double that is certainly `>= q`; used for upper bounds that must
/// never be underestimated.
pub fn upper_f64(q: &Rational) -> f64 {
    let mut x = rational_to_f64(q);
    if q.is_positive() && x <= 0.0 {
        return f64::from_bits(1);
    }
    while let Some(back) = BigRational::from_float(x) {
        if &back >= q {
            break;
        }
        x = x.next_up();
    }
    x
}

/// Parses `"num/den"`, an integer, or a decimal literal (with optional
/// exponent) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse(format!("cannot parse rational {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn rational(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn max_abs<S: Scalar>(xs: &[S]) -> S {
    xs.iter()
        .map(|x| x.abs())
        .fold(S::zero(), |m, a| if a > m { a } else { m })
}

pub(crate) fn pow_u32<S: Scalar>(x: &S, n: u32) -> S {
    let mut acc = S::one();
    for _ in 0..n {
        acc = acc * x.clone();
    }
    acc
}

/// `#[serde(with = ...)]` adapter for `Vec<S>`.
pub mod serde_vec {
    use super::Scalar;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Scalar, Ser: Serializer>(xs: &[S], s: Ser) -> Result<Ser::Ok, Ser::Error> {
        xs.iter().map(Scalar::to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(d: D) -> Result<Vec<S>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .iter()
            .map(|v| S::from_json(v).map_err(D::Error::custom))
            .collect()
    }
}

/// `#[serde(with = ...)]` adapter for `Vec<Vec<S>>`.
pub mod serde_matrix {
    use super::Scalar;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Scalar, Ser: Serializer>(m: &[Vec<S>], s: Ser) -> Result<Ser::Ok, Ser::Error> {
        m.iter()
            .map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<S>>, D::Error> {
        Vec::<Vec<Value>>::deserialize(d)?
            .iter()
            .map(|r| r.iter().map(|v| S::from_json(v).map_err(D::Error::custom)).collect())
            .collect()
    }
}
