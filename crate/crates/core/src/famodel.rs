//! The k-th order factor analysis model: parameters, the map `φ_k`, and
//! dimension bookkeeping.
//!
//! Parameters live in the lower-triangular gauge: the loading matrix is
//! stored only through its free entries, so `λ_ij` for `i < j` cannot be set.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codim;
use crate::cumulants::TensorSequence;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};
use crate::symtensor::{add_diag, binomial, json_usize, tucker_diag, DiagTensor, LoadingMatrix};

/// Observed dimension `p`, factor count `m`, maximal order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: usize,
    pub m: usize,
    pub k: usize,
}

impl ModelSpec {
    pub fn new(p: usize, m: usize, k: usize) -> Result<Self> {
        if p == 0 || m == 0 {
            return Err(Error::domain("p and m must be at least 1"));
        }
        if k < 2 {
            return Err(Error::domain("k must be at least 2"));
        }
        Ok(ModelSpec { p, m, k })
    }

    /// Parameter count `(k-1)(p+m) + pm - C(m,2)`. Requires `p >= m`.
    pub fn param_count(&self) -> usize {
        (self.k - 1) * (self.p + self.m) + self.lambda_count()
    }

    /// The parameter-count formula evaluated for any `p`, possibly negative when `p < m`.
    pub fn param_formula(&self) -> i64 {
        let (p, m, k) = (self.p as i64, self.m as i64, self.k as i64);
        (k - 1) * (p + m) + p * m - m * (m - 1) / 2
    }

    /// Free entries of a lower-triangular `p x m` matrix. Requires `p >= m`.
    pub fn lambda_count(&self) -> usize {
        debug_assert!(self.p >= self.m);
        self.p * self.m - self.m * (self.m - 1) / 2
    }

    /// Ambient dimension `C(p+k, k) - p - 1`.
    pub fn ambient_dim(&self) -> usize {
        binomial((self.p + self.k) as u64, self.k as u64) as usize - self.p - 1
    }

    /// Rows kept by the projection onto entries `t_{j..j,l}`: `(k-1) C(p+1, 2)`.
    pub fn projected_dim(&self) -> usize {
        (self.k - 1) * self.p * (self.p + 1) / 2
    }

    /// Position of `λ_uv` (1-based, `u >= v`) in the flattened λ vector
    /// `(λ11..λmm, λ_{>1}, .., λ_{>m})`.
    pub fn lambda_slot(&self, u: usize, v: usize) -> Option<usize> {
        if v == 0 || v > self.m || u < v || u > self.p {
            return None;
        }
        if u == v {
            return Some(v - 1);
        }
        let before: usize = (1..v).map(|s| self.p - s).sum();
        Some(self.m + before + (u - v - 1))
    }

    /// Inverse of [`Self::lambda_slot`].
    pub fn lambda_entry(&self, slot: usize) -> (usize, usize) {
        if slot < self.m {
            return (slot + 1, slot + 1);
        }
        let mut rest = slot - self.m;
        for v in 1..=self.m {
            let len = self.p - v;
            if rest < len {
                return (v + 1 + rest, v);
            }
            rest -= len;
        }
        panic!("lambda slot {slot} out of range");
    }

    pub fn eps_offset(&self, r: usize) -> usize {
        (r - 2) * self.p
    }

    pub fn delta_offset(&self, r: usize) -> usize {
        (self.k - 1) * self.p + (r - 2) * self.m
    }

    pub fn lambda_offset(&self) -> usize {
        (self.k - 1) * (self.p + self.m)
    }

    /// Coordinate labels in flattened order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.param_count());
        for r in 2..=self.k {
            out.extend((1..=self.p).map(|j| format!("eps{r}_{j}")));
        }
        for r in 2..=self.k {
            out.extend((1..=self.m).map(|l| format!("delta{r}_{l}")));
        }
        out.extend((0..self.lambda_count()).map(|s| {
            let (u, v) = self.lambda_entry(s);
            format!("lambda_{u}_{v}")
        }));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "M")]
    pub params: i64,
    #[serde(rename = "N")]
    pub ambient: i64,
    #[serde(rename = "N_prime")]
    pub projected: i64,
    pub dim: i64,
    pub codim: i64,
}

/// Dimension formulas, evaluated for any `p, m >= 1`, `k >= 2`.
///
/// Panics if `k!(N - M)` disagrees with the codimension polynomial at `p`.
pub fn dims(spec: &ModelSpec) -> Dims {
    let params = spec.param_formula();
    let ambient = spec.ambient_dim() as i64;
    let dim = params.min(ambient);
    let lhs = codim::factorial(spec.k) * (BigInt::from(ambient) - BigInt::from(params));
    assert_eq!(
        lhs,
        codim::h_value(spec.k, spec.m, spec.p),
        "k!(N - M) must equal h_m^(k)(p) for {spec:?}"
    );
    Dims {
        params,
        ambient,
        projected: spec.projected_dim() as i64,
        dim,
        codim: ambient - dim,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub f_value: i64,
    pub sufficient: bool,
    pub m_star: Option<usize>,
}

/// `f_k(p) = (k-1)p² - (2m+k-1)p + m² - (2k-1)m`.
pub fn f_value(spec: &ModelSpec) -> i64 {
    let (p, m, k) = (spec.p as i64, spec.m as i64, spec.k as i64);
    (k - 1) * p * p - (2 * m + k - 1) * p + m * m - (2 * k - 1) * m
}

/// Discriminant of `f_k` as a quadratic in `p`.
pub fn f_discriminant(k: usize, m: usize) -> i64 {
    let (m, k) = (m as i64, k as i64);
    4 * (2 - k) * m * m + 8 * k * (k - 1) * m + (k - 1) * (k - 1)
}

/// Largest `m` for which `f_k` has real roots: `⌊(k-1)(2k + √(4k²+k-2)) / (2(k-2))⌋`.
pub fn m_star(k: usize) -> Option<usize> {
    if k < 3 {
        return None;
    }
    let kf = k as f64;
    let approx = ((kf - 1.0) * (2.0 * kf + (4.0 * kf * kf + kf - 2.0).sqrt()) / (2.0 * (kf - 2.0))).floor();
    let mut m = approx.max(0.0) as usize;
    // settle float rounding against the exact discriminant
    while f_discriminant(k, m + 1) >= 0 {
        m += 1;
    }
    while m > 0 && f_discriminant(k, m) < 0 {
        m -= 1;
    }
    Some(m)
}

/// Whether the projection to `N'` coordinates can carry full rank: `M <= N' ⇔ f_k(p) >= 0`.
pub fn projection_sufficient(spec: &ModelSpec) -> Projection {
    let f = f_value(spec);
    Projection {
        f_value: f,
        sufficient: f >= 0,
        m_star: m_star(spec.k),
    }
}

/// A point in the domain of `φ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorParams<S> {
    spec: ModelSpec,
    coords: Vec<S>,
}

impl<S: Scalar> FactorParams<S> {
    /// Coordinates in the order `(ε^(2..k), δ^(2..k), λ)`.
    pub fn from_coords(spec: ModelSpec, coords: Vec<S>) -> Result<Self> {
        if spec.p < spec.m {
            return Err(Error::domain(format!("p = {} < m = {}", spec.p, spec.m)));
        }
        if coords.len() != spec.param_count() {
            return Err(Error::domain(format!(
                "expected {} coordinates, got {}",
                spec.param_count(),
                coords.len()
            )));
        }
        Ok(FactorParams { spec, coords })
    }

    pub fn new(spec: ModelSpec, eps: Vec<DiagTensor<S>>, delta: Vec<DiagTensor<S>>, loading: &LoadingMatrix<S>) -> Result<Self> {
        let k = spec.k;
        if eps.len() != k - 1 || delta.len() != k - 1 {
            return Err(Error::domain(format!("need {} eps and delta tensors", k - 1)));
        }
        for (n, (e, d)) in eps.iter().zip(&delta).enumerate() {
            let r = n + 2;
            if e.order != r || d.order != r || e.dim() != spec.p || d.dim() != spec.m {
                return Err(Error::domain(format!("order-{r} eps/delta shapes do not match the model")));
            }
        }
        if loading.rows() != spec.p || loading.cols() != spec.m {
            return Err(Error::domain("loading matrix shape does not match the model"));
        }
        let mut coords: Vec<S> = Vec::with_capacity(spec.param_count());
        coords.extend(eps.iter().flat_map(|e| e.diag.iter().cloned()));
        coords.extend(delta.iter().flat_map(|d| d.diag.iter().cloned()));
        for slot in 0..spec.lambda_count() {
            let (u, v) = spec.lambda_entry(slot);
            coords.push(loading.get(u, v).clone());
        }
        for i in 1..=spec.m {
            for j in (i + 1)..=spec.m {
                if !loading.get(i, j).is_zero() {
                    return Err(Error::domain("loading matrix is not lower-triangular"));
                }
            }
        }
        Self::from_coords(spec, coords)
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        let n = if spec.p >= spec.m { spec.param_count() } else { 0 };
        Self::from_coords(spec, vec![S::zero(); n])
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn eps(&self, r: usize) -> DiagTensor<S> {
        let o = self.spec.eps_offset(r);
        DiagTensor::new(r, self.coords[o..o + self.spec.p].to_vec())
    }

    pub fn delta(&self, r: usize) -> DiagTensor<S> {
        let o = self.spec.delta_offset(r);
        DiagTensor::new(r, self.coords[o..o + self.spec.m].to_vec())
    }

    /// `λ_uv` (1-based); zero above the diagonal.
    pub fn lambda(&self, u: usize, v: usize) -> S {
        match self.spec.lambda_slot(u, v) {
            Some(s) => self.coords[self.spec.lambda_offset() + s].clone(),
            None => S::zero(),
        }
    }

    pub fn loading(&self) -> LoadingMatrix<S> {
        let (p, m) = (self.spec.p, self.spec.m);
        let values = (1..=p).flat_map(|u| (1..=m).map(move |v| (u, v))).map(|(u, v)| self.lambda(u, v)).collect();
        LoadingMatrix::new(p, m, values, true).expect("gauge holds by construction")
    }

    pub fn map<T: Scalar>(&self, f: impl FnMut(&S) -> T) -> FactorParams<T> {
        FactorParams {
            spec: self.spec,
            coords: self.coords.iter().map(f).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": self.spec.p,
            "m": self.spec.m,
            "k": self.spec.k,
            "scalar": S::KIND.as_str(),
            "labels": self.spec.labels(),
            "values": self.coords.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let spec = ModelSpec::new(json_usize(v, "p", "")?, json_usize(v, "m", "")?, json_usize(v, "k", "")?)
            .map_err(|e| Error::format("p", e.to_string()))?;
        let kind = v.get("scalar").and_then(Value::as_str).and_then(ScalarKind::parse);
        if kind != Some(S::KIND) {
            return Err(Error::format("scalar", format!("expected {:?}", S::KIND.as_str())));
        }
        if let Some(labels) = v.get("labels") {
            let want = spec.labels();
            let ok = labels
                .as_array()
                .is_some_and(|l| l.len() == want.len() && l.iter().zip(&want).all(|(a, b)| a.as_str() == Some(b)));
            if !ok {
                return Err(Error::format("labels", "do not match the flattened coordinate order"));
            }
        }
        let values = v
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("values", "missing or not an array"))?;
        let coords = values
            .iter()
            .enumerate()
            .map(|(n, x)| S::from_json(x).map_err(|r| Error::format(format!("values[{n}]"), r)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coords(spec, coords).map_err(|e| Error::format("values", e.to_string()))
    }
}

/// `φ_k`: order-r output is `E^(r) + D^(r) •^r Λᵀ` for `r = 2..k`.
pub fn phi<S: Scalar>(params: &FactorParams<S>) -> TensorSequence<S> {
    let spec = params.spec();
    let loading = params.loading();
    let tensors = (2..=spec.k)
        .map(|r| {
            let t = tucker_diag(&params.delta(r), &loading).expect("shapes fixed by spec");
            add_diag(&t, &params.eps(r)).expect("shapes fixed by spec")
        })
        .collect();
    TensorSequence::new(spec.p, true, tensors).expect("consecutive orders")
}

/// Output entries of `φ_k` flattened as orders ascending, lexicographic within order.
pub fn phi_flat<S: Scalar>(params: &FactorParams<S>) -> Vec<S> {
    let out = phi(params);
    (2..=params.spec().k).flat_map(|r| out.order(r).entries().to_vec()).collect()
}
