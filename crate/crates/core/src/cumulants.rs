//! Set partitions and the moment/cumulant bijection on symmetric tensor sequences.
//!
//! For a canonical index `J = (j1..jr)` and a partition `π` of the positions
//! `{1..r}`, the sub-index `J_B` of a block `B` is read off in increasing
//! position order, which keeps it weakly increasing. No re-sorting is needed
//! inside the partition sum.

use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symtensor::{json_usize, SymTensor};

/// Largest order for which partitions are enumerated (Bell(10) = 115975).
pub const PARTITION_CAP: usize = 10;

/// A partition of `{1..r}`: blocks sorted by minimum, elements ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn from_growth(code: &[usize]) -> Self {
        let nblocks = code.iter().max().map_or(0, |&b| b + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (pos, &b) in code.iter().enumerate() {
            blocks[b].push(pos + 1);
        }
        SetPartition { blocks }
    }
}

fn enumerate_partitions(r: usize) -> Vec<SetPartition> {
    // restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[..i])
    let mut out = Vec::new();
    let mut code = vec![0usize; r];
    let mut maxes = vec![0usize; r];
    loop {
        out.push(SetPartition::from_growth(&code));
        let mut i = r - 1;
        loop {
            if i == 0 {
                return out;
            }
            if code[i] <= maxes[i - 1] {
                code[i] += 1;
                maxes[i] = maxes[i - 1].max(code[i]);
                for j in (i + 1)..r {
                    code[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

static PARTITIONS: [OnceLock<Vec<SetPartition>>; PARTITION_CAP + 1] =
    [const { OnceLock::new() }; PARTITION_CAP + 1];

/// All set partitions of `{1..r}`, cached per `r`.
pub fn partitions(r: usize) -> Result<&'static [SetPartition]> {
    if r == 0 {
        return Err(Error::domain("partitions of an empty set are not used"));
    }
    if r > PARTITION_CAP {
        return Err(Error::Capacity(format!(
            "partitions are cached up to order {PARTITION_CAP}, asked for {r}"
        )));
    }
    Ok(PARTITIONS[r].get_or_init(|| enumerate_partitions(r)))
}

/// Moment or cumulant tensors of orders `1..=k` over a common dimension.
///
/// A zero-mean sequence carries an all-zero order-1 tensor, which is
/// omitted from its JSON form.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSequence<S> {
    p: usize,
    zero_mean: bool,
    tensors: Vec<SymTensor<S>>,
}

impl<S: Scalar> TensorSequence<S> {
    /// `tensors` must have consecutive orders starting at 1, or at 2 for a
    /// zero-mean sequence.
    pub fn new(p: usize, zero_mean: bool, tensors: Vec<SymTensor<S>>) -> Result<Self> {
        let start = tensors
            .first()
            .map(SymTensor::order)
            .ok_or_else(|| Error::domain("empty tensor sequence"))?;
        let mut tensors = tensors;
        match (start, zero_mean) {
            (1, true) => {
                if tensors[0].entries().iter().any(|v| !v.is_zero()) {
                    return Err(Error::domain("zero-mean sequence has a nonzero order-1 tensor"));
                }
            }
            (1, false) => {}
            (2, true) => tensors.insert(0, SymTensor::zeros(p, 1)),
            (2, false) => {
                return Err(Error::domain("missing order-1 tensor for a sequence that is not zero-mean"))
            }
            (s, _) => return Err(Error::domain(format!("sequence starts at order {s}"))),
        }
        for (n, t) in tensors.iter().enumerate() {
            if t.order() != n + 1 {
                return Err(Error::domain(format!(
                    "missing order-{} tensor (found order {})",
                    n + 1,
                    t.order()
                )));
            }
            if t.dim() != p {
                return Err(Error::domain(format!(
                    "order-{} tensor has dimension {}, expected {p}",
                    t.order(),
                    t.dim()
                )));
            }
        }
        if tensors.len() < 2 {
            return Err(Error::domain("sequence needs max order at least 2"));
        }
        Ok(TensorSequence { p, zero_mean, tensors })
    }

    pub fn zeros(p: usize, max_order: usize, zero_mean: bool) -> Self {
        TensorSequence {
            p,
            zero_mean,
            tensors: (1..=max_order).map(|r| SymTensor::zeros(p, r)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn max_order(&self) -> usize {
        self.tensors.len()
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }

    /// Tensor of order `r` (1-based).
    pub fn order(&self, r: usize) -> &SymTensor<S> {
        &self.tensors[r - 1]
    }

    pub fn tensors(&self) -> &[SymTensor<S>] {
        &self.tensors
    }

    pub fn to_json(&self) -> Value {
        let skip = usize::from(self.zero_mean);
        json!({
            "p": self.p,
            "max_order": self.max_order(),
            "zero_mean": self.zero_mean,
            "tensors": self.tensors[skip..].iter().map(SymTensor::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let p = json_usize(v, "p", "")?;
        let k = json_usize(v, "max_order", "")?;
        let zero_mean = v
            .get("zero_mean")
            .and_then(Value::as_bool)
            .ok_or_else(|| Error::format("zero_mean", "missing or not a boolean"))?;
        let list = v
            .get("tensors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("tensors", "missing or not an array"))?;
        let tensors = list
            .iter()
            .enumerate()
            .map(|(n, t)| SymTensor::from_json_at(t, &format!("tensors[{n}].")))
            .collect::<Result<Vec<_>>>()?;
        for (n, t) in tensors.iter().enumerate() {
            if t.dim() != p {
                return Err(Error::format(format!("tensors[{n}].p"), format!("expected {p}")));
            }
        }
        let seq = Self::new(p, zero_mean, tensors).map_err(|e| Error::format("tensors", e.to_string()))?;
        if seq.max_order() != k {
            return Err(Error::format(
                "max_order",
                format!("declared {k}, tensors reach order {}", seq.max_order()),
            ));
        }
        Ok(seq)
    }
}

fn transform<S: Scalar>(input: &TensorSequence<S>, weight: impl Fn(usize) -> S) -> Result<TensorSequence<S>> {
    let k = input.max_order();
    let p = input.p;
    let mut tensors = Vec::with_capacity(k);
    let mut sub = Vec::with_capacity(k);
    for r in 1..=k {
        let parts = partitions(r)?;
        let t = SymTensor::from_fn(p, r, |idx| {
            let mut acc = S::zero();
            for part in parts {
                if input.zero_mean && part.blocks.iter().any(|b| b.len() == 1) {
                    continue;
                }
                let mut term = weight(part.len());
                for block in &part.blocks {
                    sub.clear();
                    sub.extend(block.iter().map(|&pos| idx[pos - 1]));
                    term = term * input.tensors[block.len() - 1].at_sorted(&sub).clone();
                    if term.is_zero() {
                        break;
                    }
                }
                acc = acc + term;
            }
            acc
        });
        tensors.push(t);
    }
    Ok(TensorSequence {
        p,
        zero_mean: input.zero_mean,
        tensors,
    })
}

fn factorial_i64(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// `κ(J) = Σ_π (-1)^{L-1} (L-1)! Π_{B∈π} m(J_B)`.
pub fn moments_to_cumulants<S: Scalar>(moments: &TensorSequence<S>) -> Result<TensorSequence<S>> {
    transform(moments, |blocks| {
        let w = S::from_i64(factorial_i64(blocks - 1));
        if blocks % 2 == 0 {
            -w
        } else {
            w
        }
    })
}

/// `m(J) = Σ_π Π_{B∈π} κ(J_B)`.
pub fn cumulants_to_moments<S: Scalar>(cumulants: &TensorSequence<S>) -> Result<TensorSequence<S>> {
    transform(cumulants, |_| S::one())
}

/// Laws with closed-form cumulants used by the simulation checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// `Exp(1) - 1`.
    CenteredExponential,
    /// Uniform on `(-1, 1)`.
    Uniform,
    /// `±1` with equal probability.
    Rademacher,
    /// Point mass at zero.
    Degenerate,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::CenteredExponential,
        Distribution::Uniform,
        Distribution::Rademacher,
        Distribution::Degenerate,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Distribution::CenteredExponential => "centered-exponential",
            Distribution::Uniform => "uniform",
            Distribution::Rademacher => "rademacher",
            Distribution::Degenerate => "degenerate",
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::domain(format!("unknown distribution tag {s:?}")))
    }
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // Σ_{j<m+1} C(m+1, j) B_j = 0
        let mut acc = BigRational::zero();
        let mut c = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(c.clone()) * bj;
            c = c * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Exact cumulants `(κ1, …, κk)` of a catalog law.
pub fn analytic_cumulants(dist: Distribution, k: usize) -> Vec<BigRational> {
    let int = |v: BigInt| BigRational::from_integer(v);
    let b = bernoulli(k);
    (1..=k)
        .map(|r| match dist {
            _ if r == 1 => BigRational::zero(),
            Distribution::Degenerate => BigRational::zero(),
            Distribution::CenteredExponential => int((1..r).map(BigInt::from).product()),
            // κ_r = B_r (b - a)^r / r
            Distribution::Uniform => b[r].clone() * int(BigInt::from(2).pow(r as u32)) / int(BigInt::from(r)),
            // κ_r = 2^r (2^r - 1) B_r / r
            Distribution::Rademacher => {
                let two_r = BigInt::from(2).pow(r as u32);
                b[r].clone() * int(two_r.clone() * (two_r - 1)) / int(BigInt::from(r))
            }
        })
        .collect()
}
