//! Scalar types used by the tensor code.
//!
//! Two concrete scalars are supported: exact rationals ([`BigRational`]) and
//! `f64`. Nothing converts between them implicitly; use [`to_f64`] or
//! [`rational_from_f64`] when a conversion is wanted. Modular arithmetic is
//! handled separately through the [`Ring`] trait because its modulus is a
//! runtime value.

use std::fmt::Debug;
use std::marker::PhantomData;
use std::ops::{Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Rational,
    Float,
}

impl ScalarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarKind::Rational => "rational",
            ScalarKind::Float => "float",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rational" => Some(ScalarKind::Rational),
            "float" => Some(ScalarKind::Float),
            _ => None,
        }
    }
}

pub trait Scalar:
    Clone + Debug + PartialEq + Send + Sync + Zero + One + Sub<Output = Self> + Neg<Output = Self>
{
    const KIND: ScalarKind;

    fn from_i64(v: i64) -> Self;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self, String>;
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| format!("{n} is not representable")),
            Value::String(s) => s.trim().parse::<f64>().map_err(|e| e.to_string()),
            other => Err(format!("expected a number, found {other}")),
        }
    }
}

impl Scalar for BigRational {
    const KIND: ScalarKind = ScalarKind::Rational;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => match n.as_i64() {
                Some(i) => Ok(Self::from_i64(i)),
                None => Err(format!("{n} is not an integer; write rationals as \"num/den\"")),
            },
            other => Err(format!("expected \"num/den\", found {other}")),
        }
    }
}

/// `"num/den"`, or just `"num"` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(num, den))
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Minimal commutative-ring interface for code that must run over `f64`,
/// rationals and prime fields alike (Jacobian assembly).
pub trait Ring: Sync {
    type Elem: Clone + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn from_u64(&self, n: u64) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    fn pow(&self, a: &Self::Elem, e: usize) -> Self::Elem {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }
}

/// The ring structure a [`Scalar`] already carries.
#[derive(Debug)]
pub struct Native<S>(PhantomData<fn() -> S>);

impl<S> Default for Native<S> {
    fn default() -> Self {
        Native(PhantomData)
    }
}

impl<S: Scalar> Ring for Native<S> {
    type Elem = S;

    fn zero(&self) -> S {
        S::zero()
    }
    fn one(&self) -> S {
        S::one()
    }
    fn add(&self, a: &S, b: &S) -> S {
        a.clone() + b.clone()
    }
    fn mul(&self, a: &S, b: &S) -> S {
        a.clone() * b.clone()
    }
    fn from_u64(&self, n: u64) -> S {
        S::from_i64(n as i64)
    }
    fn is_zero(&self, a: &S) -> bool {
        a.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_forms() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&rat(-4, 2)), "-2");
        assert_eq!(parse_rational(" -3/6 ").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn json_kinds_do_not_mix() {
        assert!(<BigRational as Scalar>::from_json(&serde_json::json!(0.5)).is_err());
        assert_eq!(<BigRational as Scalar>::from_json(&serde_json::json!(3)).unwrap(), rat(3, 1));
        assert_eq!(<f64 as Scalar>::from_json(&serde_json::json!(0.5)).unwrap(), 0.5);
    }
}
