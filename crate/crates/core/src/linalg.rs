//! Matrix rank over floats (SVD), prime fields and the rationals.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Ring;

/// Default moduli for modular rank, both below `2^31`.
pub const PRIMES: [u64; 2] = [2_147_483_647, 2_147_483_629];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The prime field `Z/pZ` with `p < 2^32`, elements stored reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModP {
    p: u64,
}

impl ModP {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 32 || !is_prime(p) {
            return Err(Error::domain(format!("{p} is not a prime below 2^32")));
        }
        Ok(ModP { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    pub fn inv(&self, a: u64) -> u64 {
        assert!(!a.is_multiple_of(self.p), "zero has no inverse");
        self.pow_u(a, self.p - 2)
    }

    fn pow_u(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * a % self.p;
            }
            a = a * a % self.p;
            e >>= 1;
        }
        acc
    }

    pub fn from_bigint(&self, n: &BigInt) -> u64 {
        n.mod_floor(&BigInt::from(self.p)).to_u64().expect("reduced value fits")
    }

    /// Image of a rational, or `None` if `p` divides its denominator.
    pub fn from_rational(&self, q: &BigRational) -> Option<u64> {
        let den = self.from_bigint(q.denom());
        (den != 0).then(|| self.from_bigint(q.numer()) * self.inv(den) % self.p)
    }
}

impl Ring for ModP {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn from_u64(&self, n: u64) -> u64 {
        n % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
}

/// Rank by Gaussian elimination in `Z/pZ`. Entries must be reduced.
pub fn rank_mod_p(field: ModP, mut rows: Vec<Vec<u64>>) -> usize {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n_cols {
        let Some(piv) = (rank..n_rows).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = field.inv(rows[rank][col]);
        for c in col..n_cols {
            rows[rank][c] = rows[rank][c] * inv % field.p;
        }
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[col];
            if f == 0 {
                continue;
            }
            for c in col..n_cols {
                row[c] = field.sub(row[c], f * pivot_row[c] % field.p);
            }
        }
        rank += 1;
        if rank == n_rows {
            break;
        }
    }
    rank
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination,
/// pivoting on the entry of smallest absolute value in each column.
pub fn rank_bareiss(mut rows: Vec<Vec<BigInt>>) -> usize {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..n_cols {
        let piv = (rank..n_rows)
            .filter(|&r| !rows[r][col].is_zero())
            .min_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
        let Some(piv) = piv else {
            continue;
        };
        rows.swap(rank, piv);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let a = &pivot_row[col];
        for row in tail.iter_mut() {
            let b = row[col].clone();
            for c in col + 1..n_cols {
                // exact division by the previous pivot
                let v = a * &row[c] - &b * &pivot_row[c];
                row[c] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = a.clone();
        rank += 1;
        if rank == n_rows {
            break;
        }
    }
    rank
}

/// Rank of a rational matrix: rows are scaled to integers, then Bareiss.
pub fn rank_rational(rows: &[Vec<BigRational>]) -> usize {
    let ints = rows
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| (q * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    rank_bareiss(ints)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvdRank {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub cutoff: f64,
    /// `σ_r / σ_{r+1}`; infinite when nothing is discarded or the next value is zero.
    pub gap: f64,
}

/// Numerical rank: singular values above `tol_factor · σ_max`, with
/// `tol_factor` defaulting to `max(rows, cols) · ε`.
pub fn rank_svd(rows: &[Vec<f64>], tol_factor: Option<f64>) -> Result<SvdRank> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if n_rows == 0 || n_cols == 0 {
        return Ok(SvdRank { rank: 0, singular_values: vec![], cutoff: 0.0, gap: f64::INFINITY });
    }
    let mat = DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let factor = tol_factor.unwrap_or(n_rows.max(n_cols) as f64 * f64::EPSILON);
    let cutoff = factor * sv[0];
    let rank = sv.iter().take_while(|&&s| s > cutoff && s > 0.0).count();
    let gap = match (rank, sv.get(rank)) {
        (0, _) | (_, None) => f64::INFINITY,
        (r, Some(&next)) => {
            if next == 0.0 {
                f64::INFINITY
            } else {
                sv[r - 1] / next
            }
        }
    };
    Ok(SvdRank { rank, singular_values: sv, cutoff, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    /// Plain Gauss-Jordan over the rationals.
    fn naive_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..n_cols {
            let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, piv);
            let p = rows[rank][col].clone();
            let pr: Vec<_> = rows[rank].iter().map(|x| x / &p).collect();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank {
                    let f = row[col].clone();
                    for c in 0..n_cols {
                        row[c] = &row[c] - &f * &pr[c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn default_primes_are_prime() {
        for p in PRIMES {
            assert!(is_prime(p));
            assert!(p > 1 << 30);
        }
        assert!(!is_prime(2_147_483_649));
        assert!(ModP::new(2_147_483_648).is_err());
    }

    #[test]
    fn modp_inverse_and_rationals() {
        let f = ModP::new(PRIMES[0]).unwrap();
        for a in [1u64, 2, 3, 12345, PRIMES[0] - 1] {
            assert_eq!(f.mul(&a, &f.inv(a)), 1);
        }
        let half = f.from_rational(&rat(1, 2)).unwrap();
        assert_eq!(f.mul(&half, &2), 1);
        assert_eq!(f.from_rational(&rat(-1, 1)), Some(PRIMES[0] - 1));
        let f7 = ModP::new(7).unwrap();
        assert_eq!(f7.from_rational(&rat(1, 14)), None);
    }

    #[test]
    fn small_ranks() {
        let zero = vec![vec![0.0; 4]; 3];
        assert_eq!(rank_svd(&zero, None).unwrap().rank, 0);
        let mut eye = vec![vec![0.0; 6]; 9];
        for i in 0..6 {
            eye[i + 2][i] = 1.0;
        }
        assert_eq!(rank_svd(&eye, None).unwrap().rank, 6);
        assert!(rank_svd(&[vec![f64::NAN]], None).is_err());
        let ints = vec![
            vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)],
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(6)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(1)],
        ];
        assert_eq!(rank_bareiss(ints), 2);
    }

    #[test]
    fn modp_sees_characteristic() {
        // det = 7, singular mod 7 only
        let f7 = ModP::new(7).unwrap();
        assert_eq!(rank_mod_p(f7, vec![vec![3, 1], vec![1, 5]]), 1);
        let f = ModP::new(PRIMES[1]).unwrap();
        assert_eq!(rank_mod_p(f, vec![vec![3, 1], vec![1, 5]]), 2);
    }

    fn low_rank() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..6, 1usize..6, 0usize..4).prop_flat_map(|(r, c, k)| {
            (
                prop::collection::vec(prop::collection::vec(-3i64..=3, k), r),
                prop::collection::vec(prop::collection::vec(-3i64..=3, c), k),
            )
                .prop_map(move |(a, b)| {
                    (0..r)
                        .map(|i| (0..c).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
                        .collect()
                })
        })
    }

    proptest! {
        #[test]
        fn methods_agree_with_naive(m in low_rank()) {
            let q: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect();
            let want = naive_rank(q.clone());
            let halves: Vec<Vec<BigRational>> = q.iter().map(|r| r.iter().map(|x| x / rat(2, 1)).collect()).collect();
            prop_assert_eq!(rank_rational(&halves), want);
            prop_assert_eq!(rank_bareiss(m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()), want);
            let f = ModP::new(PRIMES[0]).unwrap();
            let red = m.iter().map(|r| r.iter().map(|&x| f.from_bigint(&BigInt::from(x))).collect()).collect();
            prop_assert_eq!(rank_mod_p(f, red), want);
            let fl: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
            prop_assert_eq!(rank_svd(&fl, None).unwrap().rank, want);
        }
    }
}
