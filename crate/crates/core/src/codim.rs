//! The codimension polynomial `h_m^(k)(p) = k!(N - M)`, its positive roots,
//! and positivity certificates.
//!
//! With `e_j = e_j(1, .., k)`:
//!
//! ```text
//! h_m^(k)(p) = Σ_{j=0}^{k-2} e_j p^{k-j} + u(k,m) p + v(k,m)
//! u(k,m)     = e_{k-1} - k!(k+m)
//! v(k,m)     = k!/2 · m(m - 2k + 1)
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::famodel::{dims, ModelSpec};
use crate::poly::{first_positive_integer_after, positive_roots, IntervalView, Polynomial, RootInterval};
use crate::scalar::format_rational;

pub fn factorial(n: usize) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

/// `e_0..=e_k` evaluated at `(1, 2, .., k)`.
pub fn elementary_symmetric(k: usize) -> Vec<BigInt> {
    // e(x1..xi) from e(x1..x{i-1}): e_j += x_i e_{j-1}
    let mut e = vec![BigInt::zero(); k + 1];
    e[0] = BigInt::one();
    for i in 1..=k {
        for j in (1..=i).rev() {
            let add = &e[j - 1] * BigInt::from(i);
            e[j] += add;
        }
    }
    e
}

pub fn u_coeff(k: usize, m: usize) -> BigInt {
    let e = elementary_symmetric(k);
    &e[k - 1] - factorial(k) * BigInt::from(k + m)
}

pub fn v_coeff(k: usize, m: usize) -> BigInt {
    let m = BigInt::from(m);
    factorial(k) / 2 * &m * (&m - BigInt::from(2 * k - 1))
}

/// `k! C(p+k, k) - k!(k+m) p + k![C(m,2) - (k-1)m - 1]`, with the first term
/// expanded as `Π_{i=1}^k (p + i)`.
pub fn h_poly_product(k: usize, m: usize) -> Polynomial {
    let rising = (1..=k).fold(Polynomial::from_ints(&[1]), |acc, i| acc.mul(&Polynomial::from_ints(&[i as i64, 1])));
    let kf = factorial(k);
    let m_big = BigInt::from(m);
    let bracket = &m_big * (&m_big - 1) / 2 - BigInt::from(k - 1) * &m_big - 1;
    let tail = Polynomial::from_bigints(vec![&kf * bracket, -(&kf * BigInt::from(k + m))]);
    rising.add(&tail)
}

/// The same polynomial via `Σ_{j<=k-2} e_j p^{k-j} + u p + v`.
pub fn h_poly_symmetric(k: usize, m: usize) -> Polynomial {
    let e = elementary_symmetric(k);
    let mut coeffs = vec![BigInt::zero(); k + 1];
    for (j, ej) in e.iter().enumerate().take(k - 1) {
        coeffs[k - j] = ej.clone();
    }
    coeffs[1] = u_coeff(k, m);
    coeffs[0] = v_coeff(k, m);
    Polynomial::from_bigints(coeffs)
}

/// `h_m^(k)` as a polynomial in `p`; both constructions are checked to agree.
pub fn h_poly(k: usize, m: usize) -> Polynomial {
    let a = h_poly_product(k, m);
    let b = h_poly_symmetric(k, m);
    assert_eq!(a, b, "h_m^(k) constructions disagree for k={k}, m={m}");
    a
}

/// `h_m^(k)(p)` as an integer.
pub fn h_value(k: usize, m: usize, p: usize) -> BigInt {
    h_poly_product(k, m).eval(&int(p)).to_integer()
}

/// Whether `k!(N - M) = h_m^(k)(p)` with `N, M` from the dimension counts.
pub fn nm_identity(k: usize, p: usize, m: usize) -> bool {
    let Ok(spec) = ModelSpec::new(p, m, k) else {
        return false;
    };
    let n = BigInt::from(spec.ambient_dim());
    let mm = BigInt::from(spec.param_formula());
    factorial(k) * (n - mm) == h_poly(k, m).eval(&int(p)).to_integer()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    OneRoot,
    TwoRoots,
    NoRoot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub k: usize,
    pub m: usize,
    pub positive_roots: Vec<RootInterval>,
    pub regime: Regime,
    /// Smallest integer `p` with `h > 0` on all integers `>= p`.
    pub p0: u64,
    /// Root count agrees with the coefficient sign pattern (1 for `m <= 2k-1`, else 0 or 2).
    pub descartes_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeView {
    pub k: usize,
    pub m: usize,
    pub polynomial: String,
    pub root_count: usize,
    pub roots: Vec<IntervalView>,
    pub regime: Regime,
    pub p0: u64,
    pub descartes_consistent: bool,
}

impl RegimeReport {
    pub fn view(&self) -> RegimeView {
        RegimeView {
            k: self.k,
            m: self.m,
            polynomial: h_poly(self.k, self.m).to_string(),
            root_count: self.positive_roots.len(),
            roots: self.positive_roots.iter().map(IntervalView::from).collect(),
            regime: self.regime,
            p0: self.p0,
            descartes_consistent: self.descartes_consistent,
        }
    }
}

/// Classifies `h_m^(k)` by its number of positive roots.
pub fn regime(k: usize, m: usize) -> Result<RegimeReport> {
    if k < 3 || m == 0 {
        return Err(Error::domain("regime needs k >= 3 and m >= 1"));
    }
    let h = h_poly(k, m);
    let roots = positive_roots(&h)?;
    let regime = match roots.len() {
        0 => Regime::NoRoot,
        1 => Regime::OneRoot,
        2 => Regime::TwoRoots,
        n => return Err(Error::Numeric(format!("{n} positive roots exceeds the sign-change bound"))),
    };
    let constant_negative = h.coeff(0).is_negative();
    let descartes_consistent = constant_negative == (m < 2 * k - 1)
        && h.sign_changes() == if m < 2 * k { 1 } else { 2 }
        && if m < 2 * k { roots.len() == 1 } else { roots.len() % 2 == 0 };
    let p0 = first_positive_integer_after(&h, &roots);
    Ok(RegimeReport {
        k,
        m,
        positive_roots: roots,
        regime,
        p0,
        descartes_consistent,
    })
}

/// Linear multiplier `g(p) = p + b` making every coefficient of `h · g`
/// nonnegative, with `b` the midpoint of `[-u/e_{k-2}, -v/u]`.
///
/// Returns `None` when that interval is empty or the product check fails.
pub fn polya_certificate(k: usize, m: usize) -> Result<Option<BigRational>> {
    if k < 3 || m < 2 * k - 1 {
        return Err(Error::domain("the linear certificate needs k >= 3 and m >= 2k - 1"));
    }
    let e = elementary_symmetric(k);
    let u = int(u_coeff(k, m));
    let v = int(v_coeff(k, m));
    let lower = -u.clone() / int(e[k - 2].clone());
    let upper = -v / u;
    if lower > upper {
        return Ok(None);
    }
    let b = (lower + upper) / int(2);
    let product = h_poly(k, m).mul(&Polynomial::linear(b.clone()));
    Ok(product.coeffs().iter().all(|c| !c.is_negative()).then_some(b))
}

/// Smallest `n <= max_n` with every coefficient of `(1 + p)^n · h_m^(k)(p)`
/// nonnegative. Exists whenever `h` is positive on `[0, ∞)`.
pub fn polya_multiplier_degree(k: usize, m: usize, max_n: usize) -> Option<usize> {
    let one_plus = Polynomial::from_ints(&[1, 1]);
    let mut cur = h_poly(k, m);
    for n in 0..=max_n {
        if cur.coeffs().iter().all(|c| !c.is_negative()) {
            return Some(n);
        }
        cur = cur.mul(&one_plus);
    }
    None
}

/// `u(k,m)² - v(k,m) e_{k-2}` as a polynomial in `m`; nonpositive exactly
/// where the linear certificate interval is nonempty.
pub fn hk_poly(k: usize) -> Polynomial {
    let e = elementary_symmetric(k);
    let kf = factorial(k);
    // u = (e_{k-1} - k·k!) - k! m ;  v = k!/2 m² - k!(2k-1)/2 m
    let u = Polynomial::from_bigints(vec![&e[k - 1] - BigInt::from(k) * &kf, -kf.clone()]);
    let half: BigInt = &kf / BigInt::from(2);
    let v1: BigInt = -(&half * BigInt::from(2 * k - 1));
    let v = Polynomial::from_bigints(vec![BigInt::zero(), v1, half]);
    u.mul(&u).sub(&v.scale(&int(e[k - 2].clone())))
}

/// First `m >= 2k-1` from which the linear certificate interval stays
/// nonempty, or `None` if it never does.
pub fn polya_threshold(k: usize) -> Option<usize> {
    let hk = hk_poly(k);
    if !hk.leading()?.is_negative() {
        return None;
    }
    let roots = positive_roots(&hk).ok()?;
    let after = first_positive_integer_after(&hk.scale(&-BigRational::one()), &roots);
    // hk <= 0 at a root too; the strict bound is still a valid threshold
    let start = after.to_usize()?.max(2 * k - 1);
    Some(start)
}

/// One row of the regime table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub k: usize,
    pub m: usize,
    pub root_count: usize,
    pub roots: String,
    pub p0: u64,
    pub certificate_b: String,
}

pub fn regime_row(k: usize, m: usize) -> Result<RegimeRow> {
    let rep = regime(k, m)?;
    let cert = if m >= 2 * k - 1 { polya_certificate(k, m)? } else { None };
    Ok(RegimeRow {
        k,
        m,
        root_count: rep.positive_roots.len(),
        roots: rep
            .positive_roots
            .iter()
            .map(|r| format!("{:.6}", r.midpoint()))
            .collect::<Vec<_>>()
            .join(";"),
        p0: rep.p0,
        certificate_b: cert.as_ref().map(format_rational).unwrap_or_default(),
    })
}

/// `h_m^(k)(p)` sampled on a float grid, for plotting.
pub fn h_curve(k: usize, m: usize, p_max: f64, samples: usize) -> Vec<(f64, f64)> {
    let h = h_poly(k, m);
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let x = p_max * i as f64 / (n - 1) as f64;
            (x, h.eval_f64(x))
        })
        .collect()
}

/// Codimension `max(h, 0) / k!` cross-checked with the dimension counts.
pub fn codim_from_h(k: usize, m: usize, p: usize) -> BigInt {
    let h = h_value(k, m, p);
    let c = if h.is_positive() { h / factorial(k) } else { BigInt::zero() };
    if let Ok(spec) = ModelSpec::new(p, m, k) {
        debug_assert_eq!(c, BigInt::from(dims(&spec).codim));
    }
    c
}
