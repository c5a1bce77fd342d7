//! The Jacobian of `φ_k` and its rank by SVD, modular and exact elimination.
//!
//! Columns follow the flattened parameter order `(ε^(2..k), δ^(2..k), λ)`.
//! Full mode has one row per canonical output entry (orders ascending,
//! lexicographic within an order). Restricted mode keeps, per order, the
//! diagonal entries `t_{j..j}` and then the rows `t_{j..j,ℓ}` for `ℓ > j`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::famodel::{phi_flat, FactorParams, ModelSpec};
use crate::linalg::{self, ModP, PRIMES};
use crate::par;
use crate::scalar::{Native, Ring, Scalar};
use crate::symtensor::{canonical_index, enumerate_indices, MultiIndex};

pub fn row_labels(spec: &ModelSpec, restricted: bool) -> Vec<MultiIndex> {
    let p = spec.p;
    let mut out = Vec::new();
    for r in 2..=spec.k {
        if !restricted {
            out.extend(enumerate_indices(p, r));
            continue;
        }
        out.extend((1..=p).map(|j| canonical_index(&vec![j; r], p).expect("in range")));
        for j in 1..p {
            for l in j + 1..=p {
                let mut ix = vec![j; r - 1];
                ix.push(l);
                out.push(canonical_index(&ix, p).expect("in range"));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix<E> {
    pub spec: ModelSpec,
    pub restricted: bool,
    pub rows: Vec<MultiIndex>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<E>>,
}

impl<E: Clone> JacobianMatrix<E> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> &E {
        &self.entries[row][col]
    }

    pub fn row_of(&self, idx: &[usize]) -> Option<usize> {
        self.rows.iter().position(|r| r.as_slice() == idx)
    }

    pub fn col_of(&self, label: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == label)
    }

    pub fn map<T>(&self, f: impl Fn(&E) -> T) -> JacobianMatrix<T> {
        JacobianMatrix {
            spec: self.spec,
            restricted: self.restricted,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries: self.entries.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }
}

/// Analytic Jacobian at `coords`, evaluated in an arbitrary ring.
///
/// For an order-`r` row index with value `u` repeated `c_u` times:
/// `∂/∂ε_j = [all indices equal j]`, `∂/∂δ_ℓ = Π_s λ_{i_s ℓ}` and
/// `∂/∂λ_uv = δ_v c_u λ_uv^(c_u - 1) Π_{i_s != u} λ_{i_s v}`.
pub fn assemble_in<R: Ring>(ring: &R, spec: &ModelSpec, coords: &[R::Elem], restricted: bool) -> JacobianMatrix<R::Elem> {
    let (p, m) = (spec.p, spec.m);
    assert_eq!(coords.len(), spec.param_count(), "coordinate count");
    let lam: Vec<Vec<R::Elem>> = (1..=p)
        .map(|u| {
            (1..=m)
                .map(|v| spec.lambda_slot(u, v).map_or_else(|| ring.zero(), |s| coords[spec.lambda_offset() + s].clone()))
                .collect()
        })
        .collect();
    let rows = row_labels(spec, restricted);
    let n_cols = spec.param_count();
    let entries = rows
        .iter()
        .map(|idx| {
            let ix = idx.as_slice();
            let r = ix.len();
            let mut row = vec![ring.zero(); n_cols];
            if idx.is_diagonal() {
                row[spec.eps_offset(r) + ix[0] - 1] = ring.one();
            }
            let mut groups: Vec<(usize, usize)> = Vec::new();
            for &i in ix {
                match groups.last_mut() {
                    Some((u, c)) if *u == i => *c += 1,
                    _ => groups.push((i, 1)),
                }
            }
            for v in 1..=m {
                let powers: Vec<R::Elem> = groups.iter().map(|&(u, c)| ring.pow(&lam[u - 1][v - 1], c)).collect();
                row[spec.delta_offset(r) + v - 1] = powers.iter().fold(ring.one(), |acc, x| ring.mul(&acc, x));
                let delta = &coords[spec.delta_offset(r) + v - 1];
                for (g, &(u, c)) in groups.iter().enumerate() {
                    let Some(slot) = spec.lambda_slot(u, v) else {
                        continue;
                    };
                    let mut d = ring.mul(delta, &ring.from_u64(c as u64));
                    d = ring.mul(&d, &ring.pow(&lam[u - 1][v - 1], c - 1));
                    for (h, x) in powers.iter().enumerate() {
                        if h != g {
                            d = ring.mul(&d, x);
                        }
                    }
                    row[spec.lambda_offset() + slot] = d;
                }
            }
            row
        })
        .collect();
    JacobianMatrix {
        spec: *spec,
        restricted,
        rows,
        cols: spec.labels(),
        entries,
    }
}

pub fn assemble<S: Scalar>(params: &FactorParams<S>, restricted: bool) -> JacobianMatrix<S> {
    assemble_in(&Native::<S>::default(), params.spec(), params.coords(), restricted)
}

/// The Jacobian reduced modulo a prime; fails if a coordinate's denominator vanishes.
pub fn assemble_mod_p(params: &FactorParams<BigRational>, field: ModP, restricted: bool) -> Result<JacobianMatrix<u64>> {
    let coords = params
        .coords()
        .iter()
        .map(|q| field.from_rational(q))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::domain(format!("a coordinate is undefined modulo {}", field.modulus())))?;
    Ok(assemble_in(&field, params.spec(), &coords, restricted))
}

/// Largest `|analytic - fd| / max(1, |analytic|)` against central differences of `φ_k`.
pub fn fd_check(params: &FactorParams<f64>, step: f64) -> f64 {
    let jac = assemble(params, false);
    let mut worst: f64 = 0.0;
    for c in 0..jac.n_cols() {
        let shifted = |h: f64| {
            let mut coords = params.coords().to_vec();
            coords[c] += h;
            phi_flat(&FactorParams::from_coords(*params.spec(), coords).expect("same spec"))
        };
        let plus = shifted(step);
        let minus = shifted(-step);
        for (r, row) in jac.entries.iter().enumerate() {
            let fd = (plus[r] - minus[r]) / (2.0 * step);
            let a = row[c];
            worst = worst.max((a - fd).abs() / a.abs().max(1.0));
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    Svd,
    Modp,
    Exact,
}

impl RankMethod {
    pub const ALL: [RankMethod; 3] = [RankMethod::Svd, RankMethod::Modp, RankMethod::Exact];

    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::Svd => "svd",
            RankMethod::Modp => "modp",
            RankMethod::Exact => "exact",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown rank method {s:?}; expected svd, modp or exact")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    RandomFloat,
    RandomModp,
    Witness,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::RandomFloat => "random-float",
            PointKind::RandomModp => "random-modp",
            PointKind::Witness => "witness",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub method: RankMethod,
    pub point: PointKind,
    pub restricted: bool,
    pub rows: usize,
    pub cols: usize,
    pub computed_rank: usize,
    pub expected_rank: usize,
    /// Smallest kept over largest discarded singular value; absent when nothing is discarded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
}

impl RankReport {
    fn new<E: Clone>(jac: &JacobianMatrix<E>, method: RankMethod, point: PointKind, computed_rank: usize) -> Self {
        RankReport {
            method,
            point,
            restricted: jac.restricted,
            rows: jac.n_rows(),
            cols: jac.n_cols(),
            computed_rank,
            expected_rank: jac.n_cols().min(jac.n_rows()),
            gap: None,
            prime: None,
            trial: None,
        }
    }

    pub fn full_rank(&self) -> bool {
        self.computed_rank == self.expected_rank
    }
}

/// Numerical rank with cutoff `tol_factor · σ_max` (default `max(rows, cols) · ε`).
pub fn rank_svd(jac: &JacobianMatrix<f64>, tol_factor: Option<f64>) -> Result<RankReport> {
    let svd = linalg::rank_svd(&jac.entries, tol_factor)?;
    let mut rep = RankReport::new(jac, RankMethod::Svd, PointKind::RandomFloat, svd.rank);
    rep.gap = svd.gap.is_finite().then_some(svd.gap);
    Ok(rep)
}

/// Rank of the Jacobian at an integer (or `p`-integral) point over `Z/pZ`.
pub fn rank_modp(params: &FactorParams<BigRational>, prime: u64, restricted: bool) -> Result<RankReport> {
    let field = ModP::new(prime)?;
    let jac = assemble_mod_p(params, field, restricted)?;
    let rank = linalg::rank_mod_p(field, jac.entries.clone());
    let mut rep = RankReport::new(&jac, RankMethod::Modp, PointKind::RandomModp, rank);
    rep.prime = Some(prime);
    Ok(rep)
}

/// `ε = 0`, `δ = 1`, Λ with identity upper block and, in column `j`, one extra
/// unit at row `m + 1 + ((j - 1) mod (p - m))`.
pub fn witness_point(spec: &ModelSpec) -> Result<FactorParams<BigRational>> {
    let (p, m, k) = (spec.p, spec.m, spec.k);
    if p <= m {
        return Err(Error::domain(format!("the witness needs p > m, got p = {p}, m = {m}")));
    }
    let mut coords = vec![BigRational::zero(); spec.param_count()];
    for r in 2..=k {
        for v in 0..m {
            coords[spec.delta_offset(r) + v] = BigRational::one();
        }
    }
    for j in 1..=m {
        coords[spec.lambda_offset() + spec.lambda_slot(j, j).expect("diagonal")] = BigRational::one();
        let extra = m + 1 + (j - 1) % (p - m);
        coords[spec.lambda_offset() + spec.lambda_slot(extra, j).expect("below diagonal")] = BigRational::one();
    }
    FactorParams::from_coords(*spec, coords)
}

/// Exact rank of the restricted Jacobian at the witness point.
pub fn rank_exact(spec: &ModelSpec) -> Result<RankReport> {
    if spec.p < spec.m + 2 {
        return Err(Error::domain(format!(
            "exact certification needs p >= m + 2, got p = {}, m = {}",
            spec.p, spec.m
        )));
    }
    let jac = assemble(&witness_point(spec)?, true);
    let rank = linalg::rank_rational(&jac.entries);
    let mut rep = RankReport::new(&jac, RankMethod::Exact, PointKind::Witness, rank);
    rep.expected_rank = spec.param_count().min(rep.rows);
    Ok(rep)
}

/// Coordinates drawn uniformly from `[-2, -1] ∪ [1, 2]`.
pub fn random_shell_point<G: Rng + ?Sized>(spec: &ModelSpec, rng: &mut G) -> Result<FactorParams<f64>> {
    let n = if spec.p >= spec.m { spec.param_count() } else { 0 };
    let coords = (0..n)
        .map(|_| {
            let x: f64 = rng.gen_range(1.0..=2.0);
            if rng.gen::<bool>() {
                x
            } else {
                -x
            }
        })
        .collect();
    FactorParams::from_coords(*spec, coords)
}

/// Nonzero integer coordinates with magnitude below `2^30`.
pub fn random_integer_point<G: Rng + ?Sized>(spec: &ModelSpec, rng: &mut G) -> Result<FactorParams<BigRational>> {
    let n = if spec.p >= spec.m { spec.param_count() } else { 0 };
    let coords = (0..n)
        .map(|_| {
            let x: i64 = rng.gen_range(1..1i64 << 30);
            BigRational::from_integer(BigInt::from(if rng.gen::<bool>() { x } else { -x }))
        })
        .collect();
    FactorParams::from_coords(*spec, coords)
}

/// Tangent vectors of the column rescaling `λ_{·v} → t λ_{·v}`,
/// `δ^(r)_v → t^(-r) δ^(r)_v`, which leaves `φ_k` unchanged. One per factor.
pub fn scaling_kernel<S: Scalar>(params: &FactorParams<S>) -> Vec<Vec<S>> {
    let spec = params.spec();
    (1..=spec.m)
        .map(|v| {
            let mut out = vec![S::zero(); spec.param_count()];
            for r in 2..=spec.k {
                let at = spec.delta_offset(r) + v - 1;
                out[at] = -(S::from_i64(r as i64) * params.coords()[at].clone());
            }
            for u in v..=spec.p {
                let at = spec.lambda_offset() + spec.lambda_slot(u, v).expect("lower triangle");
                out[at] = params.coords()[at].clone();
            }
            out
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol_factor: Option<f64>,
    pub primes: Vec<u64>,
    pub methods: Vec<RankMethod>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 3,
            seed: 0,
            tol_factor: None,
            primes: PRIMES.to_vec(),
            methods: RankMethod::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub k: usize,
    pub p: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub params: usize,
    #[serde(rename = "N")]
    pub ambient: usize,
    /// `min{M, N}`.
    pub expected_rank: usize,
    /// `min{M - m, N}`, the bound left after the column-rescaling symmetry.
    pub scaling_adjusted_rank: usize,
    pub seed: u64,
    pub trials: usize,
    /// `p >= m + 2`; below that ranks are only reported.
    pub certifiable: bool,
    /// Random-point methods agree with each other on every trial.
    pub methods_agree: bool,
    /// Every report attains its expected rank.
    pub matches_formula: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    pub reports: Vec<RankReport>,
}

impl DimensionSummary {
    /// Passing means the methods agree and, where certifiable, every rank is full.
    pub fn passed(&self) -> bool {
        self.methods_agree && (!self.certifiable || self.matches_formula)
    }
}

/// Random-point rank checks with per-trial streams `(seed, trial)`, plus the
/// exact witness check when `p >= m + 2`.
pub fn verify_dimension(spec: &ModelSpec, opts: &VerifyOptions) -> Result<DimensionSummary> {
    if opts.trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if spec.p < spec.m {
        return Err(Error::domain(format!("p = {} < m = {}", spec.p, spec.m)));
    }
    for &q in &opts.primes {
        ModP::new(q)?;
    }
    let wants = |m: RankMethod| opts.methods.contains(&m);
    let per_trial = par::map((0..opts.trials).collect(), |t| -> Result<Vec<RankReport>> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(t as u64);
        let float_point = random_shell_point(spec, &mut rng)?;
        let int_point = random_integer_point(spec, &mut rng)?;
        let mut out = Vec::new();
        if wants(RankMethod::Svd) {
            out.push(rank_svd(&assemble(&float_point, false), opts.tol_factor)?);
        }
        if wants(RankMethod::Modp) {
            for &q in &opts.primes {
                out.push(rank_modp(&int_point, q, false)?);
            }
        }
        for r in &mut out {
            r.trial = Some(t);
        }
        Ok(out)
    });
    let mut reports = Vec::new();
    let mut methods_agree = true;
    for trial in per_trial {
        let trial = trial?;
        methods_agree &= trial.windows(2).all(|w| w[0].computed_rank == w[1].computed_rank);
        reports.extend(trial);
    }
    let certifiable = spec.p >= spec.m + 2;
    if certifiable && wants(RankMethod::Exact) {
        reports.push(rank_exact(spec)?);
    }
    let params = spec.param_count();
    let ambient = spec.ambient_dim();
    let min_gap = reports.iter().filter_map(|r| r.gap).reduce(f64::min);
    Ok(DimensionSummary {
        k: spec.k,
        p: spec.p,
        m: spec.m,
        params,
        ambient,
        expected_rank: params.min(ambient),
        scaling_adjusted_rank: (params - spec.m).min(ambient),
        seed: opts.seed,
        trials: opts.trials,
        certifiable,
        methods_agree,
        matches_formula: reports.iter().all(RankReport::full_rank),
        min_gap,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::famodel::projection_sufficient;
    use crate::scalar::rat;

    fn spec(p: usize, m: usize, k: usize) -> ModelSpec {
        ModelSpec::new(p, m, k).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_rational_point(s: &ModelSpec, seed: u64) -> FactorParams<BigRational> {
        let mut g = rng(seed);
        let coords = (0..s.param_count()).map(|_| rat(g.gen_range(-9..=9), g.gen_range(1..=4))).collect();
        FactorParams::from_coords(*s, coords).unwrap()
    }

    #[test]
    fn row_counts() {
        for k in 2..=5 {
            for p in 1..=6 {
                let s = spec(p, 1, k);
                assert_eq!(row_labels(&s, false).len(), s.ambient_dim());
                assert_eq!(row_labels(&s, true).len(), s.projected_dim());
            }
        }
        let rows = row_labels(&spec(3, 1, 3), true);
        let shown: Vec<String> = rows.iter().map(ToString::to_string).collect();
        assert_eq!(shown[..6], ["(1,1)", "(2,2)", "(3,3)", "(1,2)", "(1,3)", "(2,3)"]);
        assert_eq!(shown[6..9], ["(1,1,1)", "(2,2,2)", "(3,3,3)"]);
        assert_eq!(shown[9], "(1,1,2)");
    }

    #[test]
    fn fd_examples() {
        let s = spec(5, 2, 3);
        let coords = {
            let mut g = rng(7);
            (0..s.param_count()).map(|_| g.gen_range(1.0..=2.0)).collect()
        };
        assert!(fd_check(&FactorParams::from_coords(s, coords).unwrap(), 1e-5) < 1e-6);
        let z = FactorParams::<f64>::zeros(spec(4, 2, 3)).unwrap();
        assert_eq!(fd_check(&z, 1e-5), 0.0);
        let pt = random_shell_point(&spec(4, 1, 4), &mut rng(3)).unwrap();
        assert!(fd_check(&pt, 1e-5) < 1e-6);
    }

    #[test]
    fn zero_point_keeps_only_eps_identities() {
        let s = spec(4, 2, 3);
        let j = assemble(&FactorParams::<BigRational>::zeros(s).unwrap(), false);
        for (r, idx) in j.rows.iter().enumerate() {
            for (c, label) in j.cols.iter().enumerate() {
                let ix = idx.as_slice();
                let want = idx.is_diagonal() && *label == format!("eps{}_{}", ix.len(), ix[0]);
                assert_eq!(j.get(r, c).is_one(), want);
                assert!(want || j.get(r, c).is_zero());
            }
        }
        let zero = FactorParams::<BigRational>::zeros(spec(5, 2, 4)).unwrap();
        assert_eq!(rank_modp(&zero, PRIMES[0], false).unwrap().computed_rank, 5 * 3);
    }

    fn block(j: &JacobianMatrix<BigRational>, rows: &[Vec<usize>], cols: &[String]) -> Vec<Vec<BigRational>> {
        rows.iter()
            .map(|ix| {
                let r = j.row_of(ix).unwrap();
                cols.iter().map(|c| j.get(r, j.col_of(c).unwrap()).clone()).collect()
            })
            .collect()
    }

    #[test]
    fn order2_diagonal_blocks_are_scaled_identities() {
        let s = spec(6, 3, 3);
        let mut pt = small_rational_point(&s, 11);
        let mut coords = pt.clone().into_coords();
        for v in 0..3 {
            coords[s.delta_offset(2) + v] = rat(1, 1);
        }
        pt = FactorParams::from_coords(s, coords).unwrap();
        let j = assemble(&pt, true);
        for i in 1..=3 {
            let rows: Vec<Vec<usize>> = (i + 1..=6).map(|l| vec![i, l]).collect();
            let cols: Vec<String> = (i + 1..=6).map(|u| format!("lambda_{u}_{i}")).collect();
            let b = block(&j, &rows, &cols);
            for (a, row) in b.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    let want = if a == c { pt.lambda(i, i) } else { rat(0, 1) };
                    assert_eq!(*x, want);
                }
            }
        }
    }

    #[test]
    fn order2_off_diagonal_block_pattern() {
        // p = 4, m = 1: rows t_{2,3}, t_{2,4}; columns λ_21, λ_31, λ_41
        let s = spec(4, 1, 3);
        let pt = small_rational_point(&s, 5);
        let j = assemble(&pt, true);
        let l = |u| pt.lambda(u, 1);
        let d = pt.delta(2).diag[0].clone();
        let cols: Vec<String> = (2..=4).map(|u| format!("lambda_{u}_1")).collect();
        let b = block(&j, &[vec![2, 3], vec![2, 4]], &cols);
        let z = rat(0, 1);
        let want = [[l(3), l(2), z.clone()], [l(4), z, l(2)]];
        for (row, wrow) in b.iter().zip(want.iter()) {
            for (x, w) in row.iter().zip(wrow.iter()) {
                assert_eq!(*x, &d * w);
            }
        }
    }

    #[test]
    fn witness_placement() {
        let w = witness_point(&spec(4, 2, 3)).unwrap().loading();
        let rows: Vec<Vec<BigRational>> = (1..=4).map(|i| (1..=2).map(|j| w.get(i, j).clone()).collect()).collect();
        let ints = |v: [i64; 2]| v.iter().map(|&x| rat(x, 1)).collect::<Vec<_>>();
        assert_eq!(rows, vec![ints([1, 0]), ints([0, 1]), ints([1, 0]), ints([0, 1])]);
        let w = witness_point(&spec(3, 1, 3)).unwrap().loading();
        assert_eq!((1..=3).map(|i| w.get(i, 1).clone()).collect::<Vec<_>>(), vec![rat(1, 1), rat(1, 1), rat(0, 1)]);
        assert!(witness_point(&spec(2, 2, 3)).is_err());
        assert!(rank_exact(&spec(3, 2, 3)).is_err());
    }

    #[test]
    fn witness_block_identities() {
        for k in 3..=5 {
            for m in 1..=5 {
                for p in m + 2..=8 {
                    let s = spec(p, m, k);
                    let j = assemble(&witness_point(&s).unwrap(), true);
                    for i in 1..=m {
                        let rows: Vec<Vec<usize>> = (i + 1..=p).map(|l| vec![i, i, l]).collect();
                        for jj in 1..=m {
                            let cols: Vec<String> = (jj + 1..=p).map(|u| format!("lambda_{u}_{jj}")).collect();
                            let b = block(&j, &rows, &cols);
                            for (a, row) in b.iter().enumerate() {
                                for (c, x) in row.iter().enumerate() {
                                    let want = i == jj && a == c;
                                    assert_eq!(x.is_one(), want, "k={k} p={p} m={m} i={i} j={jj}");
                                    assert!(want || x.is_zero());
                                }
                            }
                        }
                    }
                    // δ^(2)-columns on the order-2 restricted rows
                    let rows: Vec<Vec<usize>> = row_labels(&s, true)
                        .into_iter()
                        .filter(|r| r.order() == 2)
                        .map(MultiIndex::into_vec)
                        .collect();
                    let cols: Vec<String> = (1..=m).map(|l| format!("delta2_{l}")).collect();
                    assert_eq!(linalg::rank_rational(&block(&j, &rows, &cols)), m);
                }
            }
        }
    }

    #[test]
    fn scaling_directions_are_in_the_kernel() {
        for (p, m, k) in [(5, 2, 3), (4, 1, 2), (6, 3, 4)] {
            let s = spec(p, m, k);
            let pt = small_rational_point(&s, 1);
            for restricted in [false, true] {
                let j = assemble(&pt, restricted);
                for v in scaling_kernel(&pt) {
                    assert!(v.iter().any(|x| !x.is_zero()));
                    for row in &j.entries {
                        let dot: BigRational = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                        assert!(dot.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn restricted_rank_never_exceeds_full() {
        for (p, m, k) in [(4, 1, 3), (5, 2, 3), (6, 2, 4)] {
            let s = spec(p, m, k);
            let pt = random_integer_point(&s, &mut rng(9)).unwrap();
            let full = rank_modp(&pt, PRIMES[0], false).unwrap().computed_rank;
            let restricted = rank_modp(&pt, PRIMES[0], true).unwrap().computed_rank;
            assert!(restricted <= full);
            assert!(projection_sufficient(&s).sufficient);
        }
    }

    #[test]
    fn generic_rank_is_reduced_by_the_scaling_orbit() {
        for (p, m, k) in [(3, 1, 3), (4, 1, 2), (5, 2, 3), (6, 3, 3), (7, 2, 5)] {
            let s = spec(p, m, k);
            let sum = verify_dimension(&s, &VerifyOptions { trials: 2, seed: 4, ..Default::default() }).unwrap();
            assert!(sum.methods_agree);
            for r in sum.reports.iter().filter(|r| r.point != PointKind::Witness) {
                assert_eq!(r.computed_rank, sum.scaling_adjusted_rank, "{s:?} {r:?}");
            }
        }
    }

    #[test]
    fn verify_is_deterministic() {
        let s = spec(5, 2, 3);
        let opts = VerifyOptions { trials: 3, seed: 99, ..Default::default() };
        let a = verify_dimension(&s, &opts).unwrap();
        let b = verify_dimension(&s, &opts).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<DimensionSummary>(&json).unwrap(), a);
        assert!(verify_dimension(&s, &VerifyOptions { trials: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn method_names() {
        for m in RankMethod::ALL {
            assert_eq!(m.as_str().parse::<RankMethod>().unwrap(), m);
        }
        assert!("qr".parse::<RankMethod>().is_err());
    }
}
