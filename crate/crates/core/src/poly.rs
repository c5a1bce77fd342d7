//! Univariate polynomials with exact rational coefficients and Sturm-sequence
//! real root isolation.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, to_f64};

/// Coefficients in ascending degree; never has a trailing zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    pub fn from_bigints(coeffs: Vec<BigInt>) -> Self {
        Self::new(coeffs.into_iter().map(BigRational::from_integer).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `x + c`
    pub fn linear(c: BigRational) -> Self {
        Self::new(vec![c, BigRational::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(i.into()))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let c = rem.last().unwrap() / &lead;
            for (i, d) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] -= &c * d;
            }
            quot[shift] = c;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        match a.leading().cloned() {
            Some(l) => a.scale(&(BigRational::one() / l)),
            None => a,
        }
    }

    /// Same roots, each simple.
    pub fn squarefree(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    /// Coefficient sign changes, ignoring zeros.
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<bool> = self.coeffs.iter().filter(|c| !c.is_zero()).map(Signed::is_positive).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let a = c.abs();
            let show = i == 0 || !a.is_one();
            if show {
                write!(f, "{}", format_rational(&a))?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Closed rational interval `[lo, hi]` containing exactly one real root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> f64 {
        to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(2.into())))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Serialisable view of an interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalView {
    pub lo: String,
    pub hi: String,
    pub mid: f64,
}

impl From<&RootInterval> for IntervalView {
    fn from(r: &RootInterval) -> Self {
        IntervalView {
            lo: format_rational(&r.lo),
            hi: format_rational(&r.hi),
            mid: r.midpoint(),
        }
    }
}

pub struct SturmChain {
    chain: Vec<Polynomial>,
    poly: Polynomial,
}

impl SturmChain {
    /// Chain of the square-free part of `poly`.
    pub fn new(poly: &Polynomial) -> Self {
        let p0 = poly.squarefree();
        let mut chain = vec![p0.clone(), p0.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].div_rem(&chain[n - 1]).1;
            if r.is_zero() {
                break;
            }
            chain.push(r.scale(&-BigRational::one()));
        }
        SturmChain { chain, poly: p0 }
    }

    fn variations(signs: impl Iterator<Item = i8>) -> usize {
        let mut last = 0i8;
        let mut n = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
        n
    }

    fn sign(x: &BigRational) -> i8 {
        if x.is_zero() {
            0
        } else if x.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn variations_at(&self, x: &BigRational) -> usize {
        Self::variations(self.chain.iter().map(|p| Self::sign(&p.eval(x))))
    }

    pub fn variations_at_infinity(&self) -> usize {
        Self::variations(self.chain.iter().map(|p| p.leading().map_or(0, Self::sign)))
    }

    /// Distinct real roots in the half-open interval `(a, b]`.
    pub fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.variations_at(a).saturating_sub(self.variations_at(b))
    }

    /// Distinct real roots in `(a, ∞)`.
    pub fn count_above(&self, a: &BigRational) -> usize {
        self.variations_at(a).saturating_sub(self.variations_at_infinity())
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    /// Halves an isolating interval `(lo, hi]`, returning the half that holds the root.
    fn bisect(&self, iv: &RootInterval) -> RootInterval {
        let mid = (&iv.lo + &iv.hi) / BigRational::from_integer(2.into());
        if self.poly.eval(&mid).is_zero() {
            return RootInterval { lo: mid.clone(), hi: mid };
        }
        if self.count(&iv.lo, &mid) == 1 {
            RootInterval { lo: iv.lo.clone(), hi: mid }
        } else {
            RootInterval { lo: mid, hi: iv.hi.clone() }
        }
    }

    /// Shrinks an isolating interval until `done` holds or the root is pinned exactly.
    pub fn refine_until(&self, mut iv: RootInterval, done: impl Fn(&RootInterval) -> bool) -> RootInterval {
        while !iv.is_exact() && !done(&iv) {
            // integer roots are common here and bisection from a rational bound never lands on them
            let n = BigRational::from_integer(iv.hi.floor().to_integer());
            if n > iv.lo && self.poly.eval(&n).is_zero() {
                return RootInterval { lo: n.clone(), hi: n };
            }
            iv = self.bisect(&iv);
        }
        iv
    }
}

/// Bound on the modulus of every root: `1 + max |a_i / a_n|`.
pub fn cauchy_bound(poly: &Polynomial) -> BigRational {
    let lead = poly.leading().expect("nonzero polynomial").abs();
    let max = poly.coeffs()[..poly.coeffs().len() - 1]
        .iter()
        .map(|c| c.abs() / &lead)
        .max()
        .unwrap_or_else(BigRational::zero);
    max + BigRational::one()
}

/// Default isolation width, `2^-20`.
pub fn default_width() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1u64 << 20))
}

/// Isolating intervals of the distinct positive real roots, ascending,
/// each refined to width at most `2^-20`.
pub fn positive_roots(poly: &Polynomial) -> Result<Vec<RootInterval>> {
    positive_roots_with_width(poly, &default_width())
}

pub fn positive_roots_with_width(poly: &Polynomial, width: &BigRational) -> Result<Vec<RootInterval>> {
    if poly.is_zero() {
        return Err(Error::domain("the zero polynomial has no isolated roots"));
    }
    // strip the root at 0
    let shift = poly.coeffs().iter().take_while(|c| c.is_zero()).count();
    let stripped = Polynomial::new(poly.coeffs()[shift..].to_vec());
    if stripped.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let chain = SturmChain::new(&stripped);
    let zero = BigRational::zero();
    let bound = cauchy_bound(&stripped);
    let mut pending = vec![(RootInterval { lo: zero.clone(), hi: bound.clone() }, chain.count(&zero, &bound))];
    let mut out = Vec::new();
    while let Some((iv, n)) = pending.pop() {
        match n {
            0 => {}
            1 => out.push(chain.refine_until(iv, |r| &r.width() <= width)),
            _ => {
                let mid = (&iv.lo + &iv.hi) / BigRational::from_integer(2.into());
                let left = chain.count(&iv.lo, &mid);
                pending.push((RootInterval { lo: iv.lo.clone(), hi: mid.clone() }, left));
                pending.push((RootInterval { lo: mid, hi: iv.hi }, n - left));
            }
        }
    }
    out.sort_by(|a, b| a.lo.cmp(&b.lo));
    Ok(out)
}

/// Smallest integer `n` with `poly > 0` on `[n, ∞)`, given a positive leading
/// coefficient and the isolated positive roots. Returns 1 when there are none.
pub fn first_positive_integer_after(poly: &Polynomial, roots: &[RootInterval]) -> u64 {
    let Some(last) = roots.last() else {
        return 1;
    };
    let chain = SturmChain::new(poly);
    let pinned = chain.refine_until(last.clone(), |r| {
        let fl = r.lo.floor();
        fl == r.hi.floor() && !r.hi.is_integer()
    });
    let floor = pinned.lo.floor().to_integer();
    let next: BigInt = floor + 1;
    next.to_u64().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn arithmetic_basics() {
        let a = Polynomial::from_ints(&[1, 1]);
        let b = Polynomial::from_ints(&[-1, 1]);
        assert_eq!(a.mul(&b), Polynomial::from_ints(&[-1, 0, 1]));
        let (q, r) = Polynomial::from_ints(&[-1, 0, 1]).div_rem(&b);
        assert_eq!(q, a);
        assert!(r.is_zero());
        assert_eq!(Polynomial::from_ints(&[0, 0, 3]).derivative(), Polynomial::from_ints(&[0, 6]));
        assert_eq!(Polynomial::from_ints(&[1, 2, 0, 0]).degree(), Some(1));
        assert_eq!(Polynomial::from_ints(&[-12, -13, 6, 1]).to_string(), "x^3 + 6x^2 - 13x - 12");
    }

    #[test]
    fn sqrt2_isolated() {
        let roots = positive_roots(&Polynomial::from_ints(&[-2, 0, 1])).unwrap();
        assert_eq!(roots.len(), 1);
        let r = &roots[0];
        assert!(r.width() <= default_width());
        assert!(r.lo.clone() * &r.lo <= rat(2, 1) && rat(2, 1) <= r.hi.clone() * &r.hi);
    }

    #[test]
    fn exact_roots_and_multiplicity() {
        // (x-1)^2 (x-3) (x+2)
        let p = Polynomial::from_ints(&[-1, 1])
            .mul(&Polynomial::from_ints(&[-1, 1]))
            .mul(&Polynomial::from_ints(&[-3, 1]))
            .mul(&Polynomial::from_ints(&[2, 1]));
        let roots = positive_roots(&p).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0].contains(&rat(1, 1)));
        assert!(roots[1].contains(&rat(3, 1)));
    }

    #[test]
    fn root_at_zero_is_not_positive() {
        let roots = positive_roots(&Polynomial::from_ints(&[0, -37, 6, 1])).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(positive_roots(&Polynomial::zero()).is_err());
        assert!(positive_roots(&Polynomial::from_ints(&[0, 0, 5])).unwrap().is_empty());
    }

    #[test]
    fn next_integer_handles_integer_roots() {
        let p = Polynomial::from_ints(&[-3, 1]).mul(&Polynomial::from_ints(&[1, 1]));
        let roots = positive_roots(&p).unwrap();
        assert_eq!(first_positive_integer_after(&p, &roots), 4);
        let p = Polynomial::from_ints(&[-2, 0, 1]);
        let roots = positive_roots(&p).unwrap();
        assert_eq!(first_positive_integer_after(&p, &roots), 2);
    }

    #[test]
    fn sturm_counts_match_float_scan() {
        // (x - 1/3)(x - 5/2)(x - 7) with an extra complex pair x^2 + 1
        let p = Polynomial::new(vec![rat(-1, 3), rat(1, 1)])
            .mul(&Polynomial::new(vec![rat(-5, 2), rat(1, 1)]))
            .mul(&Polynomial::from_ints(&[-7, 1]))
            .mul(&Polynomial::from_ints(&[1, 0, 1]));
        let chain = SturmChain::new(&p);
        assert_eq!(chain.count(&rat(0, 1), &rat(10, 1)), 3);
        assert_eq!(chain.count(&rat(1, 1), &rat(7, 1)), 2);
        assert_eq!(chain.count_above(&rat(3, 1)), 1);
    }
}
