//! Monte Carlo draws from `X = ΛY + ε` and comparison of empirical
//! cumulants against `φ_k`.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cumulants::{analytic_cumulants, moments_to_cumulants, Distribution, TensorSequence};
use crate::error::{Error, Result};
use crate::famodel::ModelSpec;
use crate::par;
use crate::symtensor::{add_diag, enumerate_indices, tucker_diag, DiagTensor, LoadingMatrix, SymTensor};

/// Samples per generator substream.
pub const CHUNK: usize = 8192;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const BOOTSTRAP_BLOCKS: usize = 1000;
pub const WARN_AT: f64 = 5.0;
pub const FAIL_AT: f64 = 8.0;
/// Orders above this are outside the supported desk scale.
pub const MAX_ORDER: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub spec: ModelSpec,
    pub factor_dist: Distribution,
    pub noise_dist: Distribution,
    pub loading: LoadingMatrix<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate_shape(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::domain("samples must be at least 1"));
        }
        if self.loading.rows() != self.spec.p || self.loading.cols() != self.spec.m {
            return Err(Error::domain(format!(
                "loading is {}x{}, model expects {}x{}",
                self.loading.rows(),
                self.loading.cols(),
                self.spec.p,
                self.spec.m
            )));
        }
        if self.spec.k > MAX_ORDER {
            return Err(Error::domain(format!("order {} exceeds the supported maximum {MAX_ORDER}", self.spec.k)));
        }
        Ok(())
    }
}

/// Row-major `samples x p` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub p: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        if self.p == 0 {
            0
        } else {
            self.data.len() / self.p
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p.max(1))
    }
}

/// One draw from a catalog law; every law has mean zero.
pub fn sample_one<G: Rng + ?Sized>(dist: Distribution, rng: &mut G) -> f64 {
    match dist {
        Distribution::CenteredExponential => {
            let e: f64 = rng.sample(Exp1);
            e - 1.0
        }
        Distribution::Uniform => rng.gen_range(-1.0..1.0),
        Distribution::Rademacher => {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Distribution::Degenerate => 0.0,
    }
}

/// The signal `ΛY` and the noise `ε` as separate sample matrices.
/// Chunk `c` draws from stream `c` of the seeded generator.
pub fn draw_components(config: &SimConfig) -> Result<(Samples, Samples)> {
    config.validate_shape()?;
    let (p, m) = (config.spec.p, config.spec.m);
    let n_chunks = config.samples.div_ceil(CHUNK);
    let chunks = par::map((0..n_chunks).collect(), |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(c as u64);
        let rows = CHUNK.min(config.samples - c * CHUNK);
        let mut signal = Vec::with_capacity(rows * p);
        let mut noise = Vec::with_capacity(rows * p);
        let mut y = vec![0.0; m];
        for _ in 0..rows {
            for v in y.iter_mut() {
                *v = sample_one(config.factor_dist, &mut rng);
            }
            for i in 1..=p {
                signal.push((1..=m).map(|j| config.loading.get(i, j) * y[j - 1]).sum::<f64>());
            }
            for _ in 0..p {
                noise.push(sample_one(config.noise_dist, &mut rng));
            }
        }
        (signal, noise)
    });
    let mut signal = Vec::with_capacity(config.samples * p);
    let mut noise = Vec::with_capacity(config.samples * p);
    for (s, e) in chunks {
        signal.extend(s);
        noise.extend(e);
    }
    Ok((Samples { p, data: signal }, Samples { p, data: noise }))
}

/// `X = ΛY + ε`, deterministic under the seed.
pub fn draw(config: &SimConfig) -> Result<Samples> {
    let (mut x, e) = draw_components(config)?;
    for (a, b) in x.data.iter_mut().zip(&e.data) {
        *a += b;
    }
    Ok(x)
}

/// For each order, the (prefix rank, last coordinate) of every canonical entry.
struct MonomialPlan {
    p: usize,
    orders: Vec<Vec<(usize, usize)>>,
}

impl MonomialPlan {
    fn new(p: usize, k: usize) -> Self {
        let orders = (1..=k)
            .map(|r| {
                enumerate_indices(p, r)
                    .into_iter()
                    .map(|ix| {
                        let s = ix.as_slice();
                        let prefix = if r == 1 {
                            0
                        } else {
                            crate::symtensor::rank_sorted(&s[..r - 1], p)
                        };
                        (prefix, s[r - 1] - 1)
                    })
                    .collect()
            })
            .collect();
        MonomialPlan { p, orders }
    }

    fn sizes(&self) -> Vec<usize> {
        self.orders.iter().map(Vec::len).collect()
    }

    /// Adds every monomial of `x` into `acc` (one vector per order).
    fn accumulate(&self, x: &[f64], scratch: &mut [Vec<f64>], acc: &mut [Vec<f64>]) {
        for (r, plan) in self.orders.iter().enumerate() {
            for (e, &(prefix, last)) in plan.iter().enumerate() {
                let v = if r == 0 { x[last] } else { scratch[r - 1][prefix] * x[last] };
                scratch[r][e] = v;
                acc[r][e] += v;
            }
        }
    }

    fn sums(&self, samples: &Samples, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        let mut acc: Vec<Vec<f64>> = self.sizes().into_iter().map(|n| vec![0.0; n]).collect();
        let mut scratch = acc.clone();
        for i in range {
            self.accumulate(samples.row(i), &mut scratch, &mut acc);
        }
        acc
    }

    fn to_moments(&self, sums: &[Vec<f64>], n: f64) -> TensorSequence<f64> {
        let tensors = sums
            .iter()
            .enumerate()
            .map(|(r, s)| SymTensor::from_entries(self.p, r + 1, s.iter().map(|v| v / n).collect()).expect("sizes"))
            .collect();
        TensorSequence::new(self.p, false, tensors).expect("orders 1..=k")
    }
}

/// Sample averages of every canonical monomial up to order `k`.
pub fn empirical_moments(samples: &Samples, k: usize) -> Result<TensorSequence<f64>> {
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(Error::domain(format!("max order must lie in 2..={MAX_ORDER}")));
    }
    let plan = MonomialPlan::new(samples.p, k);
    let sums = block_sums(&plan, samples, samples.len().min(BOOTSTRAP_BLOCKS));
    let total = add_blocks(&plan, sums.iter());
    Ok(plan.to_moments(&total, samples.len() as f64))
}

fn block_bounds(n: usize, blocks: usize, b: usize) -> std::ops::Range<usize> {
    b * n / blocks..(b + 1) * n / blocks
}

fn block_sums(plan: &MonomialPlan, samples: &Samples, blocks: usize) -> Vec<(usize, Vec<Vec<f64>>)> {
    let n = samples.len();
    par::map((0..blocks).collect(), |b| {
        let range = block_bounds(n, blocks, b);
        (range.len(), plan.sums(samples, range))
    })
}

fn add_blocks<'a>(plan: &MonomialPlan, blocks: impl Iterator<Item = &'a (usize, Vec<Vec<f64>>)>) -> Vec<Vec<f64>> {
    let mut acc: Vec<Vec<f64>> = plan.sizes().into_iter().map(|n| vec![0.0; n]).collect();
    for (_, s) in blocks {
        for (a, b) in acc.iter_mut().zip(s) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    acc
}

/// Empirical cumulants with bootstrap standard errors (blocks of i.i.d.
/// rows resampled with replacement).
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantEstimate {
    pub cumulants: TensorSequence<f64>,
    pub std_errors: TensorSequence<f64>,
}

pub fn estimate_cumulants(samples: &Samples, k: usize, seed: u64) -> Result<CumulantEstimate> {
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(Error::domain(format!("max order must lie in 2..={MAX_ORDER}")));
    }
    let p = samples.p;
    let plan = MonomialPlan::new(p, k);
    let blocks = samples.len().min(BOOTSTRAP_BLOCKS);
    let sums = block_sums(&plan, samples, blocks);
    let total = add_blocks(&plan, sums.iter());
    let cumulants = moments_to_cumulants(&plan.to_moments(&total, samples.len() as f64))?;

    // resample streams sit after any chunk stream a draw could use
    let resampled = par::map((0..BOOTSTRAP_RESAMPLES).collect(), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((1u64 << 63) + b as u64);
        let picks: Vec<&(usize, Vec<Vec<f64>>)> = (0..blocks).map(|_| &sums[rng.gen_range(0..blocks)]).collect();
        let n: usize = picks.iter().map(|(len, _)| len).sum();
        let s = add_blocks(&plan, picks.into_iter());
        moments_to_cumulants(&plan.to_moments(&s, n as f64)).expect("valid sequence")
    });
    let tensors = (1..=k)
        .map(|r| {
            let len = cumulants.order(r).len();
            let se = (0..len)
                .map(|e| {
                    let vals: Vec<f64> = resampled.iter().map(|c| c.order(r).entries()[e]).collect();
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1).max(1) as f64;
                    var.sqrt()
                })
                .collect();
            SymTensor::from_entries(p, r, se).expect("sizes")
        })
        .collect();
    Ok(CumulantEstimate {
        cumulants,
        std_errors: TensorSequence::new(p, false, tensors)?,
    })
}

/// `φ_k` at `ε^(r) = κ_r(noise)`, `δ^(r) = κ_r(factor)` and the configured Λ.
pub fn predicted_cumulants(config: &SimConfig) -> Result<TensorSequence<f64>> {
    config.validate_shape()?;
    let (p, m, k) = (config.spec.p, config.spec.m, config.spec.k);
    let kf = analytic_cumulants(config.factor_dist, k);
    let kn = analytic_cumulants(config.noise_dist, k);
    let f = |q: &num_rational::BigRational| q.to_f64().expect("finite");
    let tensors = (2..=k)
        .map(|r| {
            let d = DiagTensor::new(r, vec![f(&kf[r - 1]); m]);
            let e = DiagTensor::new(r, vec![f(&kn[r - 1]); p]);
            add_diag(&tucker_diag(&d, &config.loading)?, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    TensorSequence::new(p, true, tensors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Pass,
    Warn,
    Fail,
}

impl Flag {
    pub fn from_normalized(z: f64) -> Flag {
        if z.is_nan() || z >= FAIL_AT {
            Flag::Fail
        } else if z >= WARN_AT {
            Flag::Warn
        } else {
            Flag::Pass
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDeviation {
    pub index: Vec<usize>,
    pub empirical: f64,
    pub predicted: f64,
    pub deviation: f64,
    pub std_error: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderDeviation {
    pub order: usize,
    pub max_deviation: f64,
    pub max_normalized: f64,
    pub flag: Flag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub k: usize,
    pub p: usize,
    pub m: usize,
    pub factor_dist: String,
    pub noise_dist: String,
    pub samples: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub orders: Vec<OrderDeviation>,
    pub max_normalized: f64,
    pub flag: Flag,
    pub entries: Vec<EntryDeviation>,
}

/// `|a - b| / se`, with a zero standard error counting only exact agreement.
/// The absolute slack covers float noise in exact-zero configurations.
fn normalized(dev: f64, se: f64) -> f64 {
    if se > 0.0 {
        dev / se
    } else if dev <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares empirical cumulants of a simulated sample with `φ_k`.
pub fn validate(config: &SimConfig) -> Result<DeviationReport> {
    let predicted = predicted_cumulants(config)?;
    let x = draw(config)?;
    let est = estimate_cumulants(&x, config.spec.k, config.seed)?;
    let mut orders = Vec::new();
    let mut entries = Vec::new();
    for r in 2..=config.spec.k {
        let (mut max_dev, mut max_z) = (0.0f64, 0.0f64);
        let emp = est.cumulants.order(r);
        let se = est.std_errors.order(r);
        for ((idx, &e), (&pr, &s)) in emp.iter().zip(predicted.order(r).entries().iter().zip(se.entries())) {
            let dev = (e - pr).abs();
            let z = normalized(dev, s);
            max_dev = max_dev.max(dev);
            max_z = max_z.max(z);
            entries.push(EntryDeviation {
                index: idx.into_vec(),
                empirical: e,
                predicted: pr,
                deviation: dev,
                std_error: s,
                normalized: z,
            });
        }
        orders.push(OrderDeviation {
            order: r,
            max_deviation: max_dev,
            max_normalized: max_z,
            flag: Flag::from_normalized(max_z),
        });
    }
    let max_normalized = orders.iter().map(|o| o.max_normalized).fold(0.0, f64::max);
    Ok(DeviationReport {
        k: config.spec.k,
        p: config.spec.p,
        m: config.spec.m,
        factor_dist: config.factor_dist.tag().to_string(),
        noise_dist: config.noise_dist.tag().to_string(),
        samples: config.samples,
        seed: config.seed,
        bootstrap_resamples: BOOTSTRAP_RESAMPLES,
        orders,
        max_normalized,
        flag: Flag::from_normalized(max_normalized),
        entries,
    })
}
