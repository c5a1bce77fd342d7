//! Symmetric tensors stored on canonical (weakly increasing) multi-indices.
//!
//! Indices are 1-based everywhere in the public API. Storage is a dense
//! vector ordered lexicographically over canonical multi-indices, so entry
//! lookup is a combinatorial rank computation with no hashing.

use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of weakly increasing tuples of length `r` over `n` symbols.
pub fn multichoose(n: usize, r: usize) -> usize {
    if r == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    binomial((n + r - 1) as u64, r as u64) as usize
}

/// A weakly increasing, 1-based index tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// Lexicographic position among all canonical indices of this order over `[p]`.
    pub fn rank(&self, p: usize) -> usize {
        rank_sorted(&self.0, p)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// Sorts `raw` into canonical form after range-checking against `[p]`.
pub fn canonical_index(raw: &[usize], p: usize) -> Result<MultiIndex> {
    if raw.is_empty() {
        return Err(Error::domain("multi-index must have at least one entry"));
    }
    if let Some(bad) = raw.iter().find(|&&i| i == 0 || i > p) {
        return Err(Error::domain(format!("index {bad} outside [1, {p}]")));
    }
    let mut v = raw.to_vec();
    v.sort_unstable();
    Ok(MultiIndex(v))
}

// `sorted` is 1-based and weakly increasing.
pub(crate) fn rank_sorted(sorted: &[usize], p: usize) -> usize {
    let r = sorted.len();
    let mut rank = 0;
    let mut lo = 1;
    for (s, &a) in sorted.iter().enumerate() {
        let rem = r - s - 1;
        for v in lo..a {
            rank += multichoose(p + 1 - v, rem);
        }
        lo = a;
    }
    rank
}

/// Advances a weakly increasing tuple to its lexicographic successor.
pub(crate) fn next_index(idx: &mut [usize], p: usize) -> bool {
    let Some(s) = idx.iter().rposition(|&a| a < p) else {
        return false;
    };
    let v = idx[s] + 1;
    for a in &mut idx[s..] {
        *a = v;
    }
    true
}

pub fn enumerate_indices(p: usize, r: usize) -> Vec<MultiIndex> {
    if p == 0 || r == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(multichoose(p, r));
    let mut idx = vec![1; r];
    loop {
        out.push(MultiIndex(idx.clone()));
        if !next_index(&mut idx, p) {
            break;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<S> {
    p: usize,
    order: usize,
    entries: Vec<S>,
}

impl<S: Scalar> SymTensor<S> {
    pub fn zeros(p: usize, order: usize) -> Self {
        SymTensor {
            p,
            order,
            entries: vec![S::zero(); multichoose(p, order)],
        }
    }

    /// Builds a tensor by evaluating `f` on every canonical index, in storage order.
    pub fn from_fn(p: usize, order: usize, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut entries = Vec::with_capacity(multichoose(p, order));
        if p > 0 && order > 0 {
            let mut idx = vec![1; order];
            loop {
                entries.push(f(&idx));
                if !next_index(&mut idx, p) {
                    break;
                }
            }
        }
        SymTensor { p, order, entries }
    }

    pub fn from_entries(p: usize, order: usize, entries: Vec<S>) -> Result<Self> {
        let want = multichoose(p, order);
        if entries.len() != want {
            return Err(Error::domain(format!(
                "order-{order} tensor over [{p}] needs {want} entries, got {}",
                entries.len()
            )));
        }
        Ok(SymTensor { p, order, entries })
    }
}

impl<S> SymTensor<S> {
    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    /// Entry at any permutation of a valid index tuple.
    pub fn get(&self, raw: &[usize]) -> Result<&S> {
        if raw.len() != self.order {
            return Err(Error::domain(format!(
                "index of length {} for an order-{} tensor",
                raw.len(),
                self.order
            )));
        }
        let idx = canonical_index(raw, self.p)?;
        Ok(&self.entries[rank_sorted(idx.as_slice(), self.p)])
    }

    pub(crate) fn at_sorted(&self, sorted: &[usize]) -> &S {
        &self.entries[rank_sorted(sorted, self.p)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &S)> {
        enumerate_indices(self.p, self.order)
            .into_iter()
            .zip(self.entries.iter())
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> SymTensor<T> {
        SymTensor {
            p: self.p,
            order: self.order,
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

impl<S: Scalar> SymTensor<S> {
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(idx, v)| json!({ "idx": idx.as_slice(), "val": v.to_json() }))
            .collect();
        json!({
            "p": self.p,
            "order": self.order,
            "scalar": S::KIND.as_str(),
            "entries": entries,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        Self::from_json_at(v, "")
    }

    pub(crate) fn from_json_at(v: &Value, path: &str) -> Result<Self> {
        let field = |name: &str| format!("{path}{name}");
        let p = json_usize(v, "p", path)?;
        let order = json_usize(v, "order", path)?;
        if p == 0 || order == 0 {
            return Err(Error::format(field("p"), "dimension and order must be at least 1"));
        }
        let kind = v
            .get("scalar")
            .and_then(Value::as_str)
            .and_then(ScalarKind::parse)
            .ok_or_else(|| Error::format(field("scalar"), "expected \"rational\" or \"float\""))?;
        if kind != S::KIND {
            return Err(Error::format(
                field("scalar"),
                format!("expected {}, found {}", S::KIND.as_str(), kind.as_str()),
            ));
        }
        let list = v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format(field("entries"), "missing or not an array"))?;
        let mut t = SymTensor::<S>::zeros(p, order);
        for (n, e) in list.iter().enumerate() {
            let here = field(&format!("entries[{n}]"));
            let idx: Vec<usize> = e
                .get("idx")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format(format!("{here}.idx"), "missing or not an array"))?
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::format(format!("{here}.idx"), "indices must be positive integers"))?;
            if idx.len() != order {
                return Err(Error::format(format!("{here}.idx"), format!("expected {order} indices")));
            }
            if idx.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::format(format!("{here}.idx"), "indices must be weakly increasing"));
            }
            if idx.iter().any(|&i| i == 0 || i > p) {
                return Err(Error::format(format!("{here}.idx"), format!("index outside [1, {p}]")));
            }
            let val = e
                .get("val")
                .ok_or_else(|| Error::format(format!("{here}.val"), "missing"))
                .and_then(|x| S::from_json(x).map_err(|r| Error::format(format!("{here}.val"), r)))?;
            let slot = rank_sorted(&idx, p);
            t.entries[slot] = val;
        }
        Ok(t)
    }
}

pub(crate) fn json_usize(v: &Value, name: &str, path: &str) -> Result<usize> {
    v.get(name)
        .and_then(Value::as_u64)
        .map(|u| u as usize)
        .ok_or_else(|| Error::format(format!("{path}{name}"), "missing or not a non-negative integer"))
}

/// A diagonal symmetric tensor, stored by its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagTensor<S> {
    pub order: usize,
    pub diag: Vec<S>,
}

impl<S: Scalar> DiagTensor<S> {
    pub fn new(order: usize, diag: Vec<S>) -> Self {
        DiagTensor { order, diag }
    }

    pub fn zeros(n: usize, order: usize) -> Self {
        DiagTensor {
            order,
            diag: vec![S::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_sym(&self) -> SymTensor<S> {
        SymTensor::from_fn(self.dim(), self.order, |idx| {
            if idx[0] == idx[idx.len() - 1] {
                self.diag[idx[0] - 1].clone()
            } else {
                S::zero()
            }
        })
    }
}

/// A `p x m` loading matrix with `p >= m`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadingMatrix<S> {
    p: usize,
    m: usize,
    values: Vec<S>,
    lower_triangular: bool,
}

impl<S: Scalar> LoadingMatrix<S> {
    /// `lower_triangular` asserts `λ_ij = 0` for `i < j`; it is checked here.
    pub fn new(p: usize, m: usize, values: Vec<S>, lower_triangular: bool) -> Result<Self> {
        if m == 0 || p < m {
            return Err(Error::domain(format!("loading matrix needs p >= m >= 1, got {p}x{m}")));
        }
        if values.len() != p * m {
            return Err(Error::domain(format!("{p}x{m} matrix needs {} values", p * m)));
        }
        if lower_triangular {
            for i in 0..m {
                for j in (i + 1)..m {
                    if !values[i * m + j].is_zero() {
                        return Err(Error::domain(format!(
                            "entry ({}, {}) above the diagonal is nonzero",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(LoadingMatrix {
            p,
            m,
            values,
            lower_triangular,
        })
    }

    pub fn from_rows(rows: Vec<Vec<S>>, lower_triangular: bool) -> Result<Self> {
        let p = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::domain("ragged rows"));
        }
        Self::new(p, m, rows.into_iter().flatten().collect(), lower_triangular)
    }
}

impl<S> LoadingMatrix<S> {
    pub fn rows(&self) -> usize {
        self.p
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.lower_triangular
    }

    /// 1-based entry `λ_ij`.
    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.values[(i - 1) * self.m + (j - 1)]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// `D •^r Lᵀ`: entry `(i1..ir)` is `Σ_ℓ d_ℓ λ_{i1,ℓ} ⋯ λ_{ir,ℓ}`.
///
/// With a lower-triangular `L` the sum stops at `min(m, i1)` since every
/// later term contains `λ_{i1,ℓ} = 0`.
pub fn tucker_diag<S: Scalar>(d: &DiagTensor<S>, l: &LoadingMatrix<S>) -> Result<SymTensor<S>> {
    if d.dim() != l.cols() {
        return Err(Error::domain(format!(
            "diagonal core has size {} but loading matrix has {} columns",
            d.dim(),
            l.cols()
        )));
    }
    let m = l.cols();
    Ok(SymTensor::from_fn(l.rows(), d.order, |idx| {
        let upper = if l.is_lower_triangular() { m.min(idx[0]) } else { m };
        let mut acc = S::zero();
        for ell in 1..=upper {
            let mut term = d.diag[ell - 1].clone();
            for &i in idx {
                term = term * l.get(i, ell).clone();
            }
            acc = acc + term;
        }
        acc
    }))
}

pub fn add_diag<S: Scalar>(t: &SymTensor<S>, e: &DiagTensor<S>) -> Result<SymTensor<S>> {
    if t.dim() != e.dim() || t.order() != e.order {
        return Err(Error::domain(format!(
            "cannot add order-{} diagonal over [{}] to order-{} tensor over [{}]",
            e.order,
            e.dim(),
            t.order(),
            t.dim()
        )));
    }
    let mut out = t.clone();
    for j in 1..=e.dim() {
        let slot = rank_sorted(&vec![j; t.order()], t.dim());
        out.entries[slot] = out.entries[slot].clone() + e.diag[j - 1].clone();
    }
    Ok(out)
}
