//! The `hofa` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codim::{self, RegimeRow};
use crate::cumulants::{cumulants_to_moments, moments_to_cumulants, Distribution, TensorSequence};
use crate::error::{Error, Result};
use crate::famodel::{dims, projection_sufficient, ModelSpec};
use crate::jacobian::{self, RankMethod, VerifyOptions};
use crate::linalg::PRIMES;
use crate::par;
use crate::poly::positive_roots;
use crate::scalar::{format_rational, Scalar, ScalarKind};
use crate::simulate::{self, Flag, SimConfig};
use crate::symtensor::LoadingMatrix;

#[derive(Debug, Parser)]
#[command(name = "hofa", version, about = "Dimension and identifiability checks for higher-order factor analysis models")]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parameter count, ambient dimension and expected codimension.
    Dim(DimArgs),
    /// Jacobian rank at random points and at the witness point.
    Rank(RankArgs),
    /// Positive roots of the codimension polynomial.
    Roots(RootsArgs),
    /// Coefficient-positivity certificate for the codimension polynomial.
    Polya(PolyaArgs),
    /// Moments to cumulants or back, on a JSON tensor sequence.
    Convert(ConvertArgs),
    /// Simulate the model and compare empirical cumulants with the prediction.
    Simulate(SimulateArgs),
    /// Tabulate dimensions or root regimes over a grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    m: usize,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.p, self.m, self.k)
    }
}

#[derive(Debug, Args)]
struct DimArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to one method; all three run by default.
    #[arg(long, value_parser = parse_method)]
    method: Option<RankMethod>,
    /// Relative singular-value cutoff for the SVD method.
    #[arg(long)]
    tol_factor: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RootsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PolyaArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Largest power of (1 + p) tried as a fallback multiplier.
    #[arg(long, default_value_t = 200)]
    max_degree: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Cumulants,
    Moments,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Tensor-sequence JSON file.
    input: PathBuf,
    #[arg(long, value_enum)]
    to: Target,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Factor distribution.
    #[arg(long, default_value = "centered-exponential", value_parser = parse_dist)]
    dist: Distribution,
    #[arg(long, default_value = "centered-exponential", value_parser = parse_dist)]
    noise_dist: Distribution,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON array of loading-matrix rows; a fixed lower-triangular matrix by default.
    #[arg(long)]
    loading: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_range, default_value = "3..3")]
    k_range: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range, default_value = "1..10")]
    p_range: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range, default_value = "1..5")]
    m_range: RangeInclusive<usize>,
    /// Add a modular Jacobian rank at one random point per cell.
    #[arg(long)]
    with_rank: bool,
    /// Tabulate root regimes over (k, m) instead of dimensions.
    #[arg(long)]
    regimes: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    json: bool,
}

fn parse_method(s: &str) -> std::result::Result<RankMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dist(s: &str) -> std::result::Result<Distribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `a..b` (inclusive) or a single value.
pub fn parse_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad range bound {t:?}"));
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
        None => {
            let v = num(s)?;
            v..=v
        }
    };
    if r.start() > r.end() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(r)
}

/// Exit status and the text to print.
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, ok: true }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code: 0 success, 1 failed verification, 2 bad input.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return match e {
                Error::Numeric(_) => 1,
                _ => 2,
            };
        }
    };
    let mut text = outcome.text;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let written = match &cli.out {
        Some(path) => fs::write(path, &text).map_err(Error::from),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    if outcome.ok {
        0
    } else {
        1
    }
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Dim(a) => cmd_dim(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Roots(a) => cmd_roots(a),
        Command::Polya(a) => cmd_polya(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

#[derive(Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimOutput {
    #[serde(rename = "M")]
    pub params: i64,
    #[serde(rename = "N")]
    pub ambient: i64,
    pub dim: i64,
    pub codim: i64,
}

fn cmd_dim(a: &DimArgs) -> Result<Outcome> {
    let spec = a.model.spec()?;
    let d = dims(&spec);
    if a.json {
        return Ok(Outcome::ok(to_json(&DimOutput {
            params: d.params,
            ambient: d.ambient,
            dim: d.dim,
            codim: d.codim,
        })));
    }
    let proj = projection_sufficient(&spec);
    Ok(Outcome::ok(format!(
        "k={} p={} m={}\nM = {}\nN = {}\nN' = {}\ndim = {}\ncodim = {}\nprojection sufficient: {} (f = {})",
        spec.k, spec.p, spec.m, d.params, d.ambient, d.projected, d.dim, d.codim, proj.sufficient, proj.f_value
    )))
}

fn cmd_rank(a: &RankArgs) -> Result<Outcome> {
    let spec = a.model.spec()?;
    let opts = VerifyOptions {
        trials: a.trials,
        seed: a.seed,
        tol_factor: a.tol_factor,
        primes: PRIMES.to_vec(),
        methods: a.method.map_or_else(|| RankMethod::ALL.to_vec(), |m| vec![m]),
    };
    if a.method == Some(RankMethod::Exact) {
        let rep = jacobian::rank_exact(&spec)?;
        let ok = rep.full_rank();
        let text = if a.json {
            to_json(&rep)
        } else {
            format!("exact rank at witness: {} of {} ({}x{} restricted)", rep.computed_rank, rep.expected_rank, rep.rows, rep.cols)
        };
        return Ok(Outcome { text, ok });
    }
    let sum = jacobian::verify_dimension(&spec, &opts)?;
    let ok = sum.passed();
    if a.json {
        return Ok(Outcome { text: to_json(&sum), ok });
    }
    let mut text = format!(
        "k={} p={} m={} seed={}\nM = {}, N = {}, min(M, N) = {}, min(M - m, N) = {}\n",
        sum.k, sum.p, sum.m, sum.seed, sum.params, sum.ambient, sum.expected_rank, sum.scaling_adjusted_rank
    );
    for r in &sum.reports {
        let mut line = format!("{:<5} {:<13} rank {:>4} / {:<4}", r.method.as_str(), r.point.as_str(), r.computed_rank, r.expected_rank);
        if let Some(t) = r.trial {
            line += &format!(" trial {t}");
        }
        if let Some(q) = r.prime {
            line += &format!(" prime {q}");
        }
        if let Some(g) = r.gap {
            line += &format!(" gap {g:.3e}");
        }
        text += &line;
        text.push('\n');
    }
    text += &format!(
        "methods agree: {}\nfull rank: {}{}",
        sum.methods_agree,
        sum.matches_formula,
        if sum.certifiable { "" } else { " (p < m + 2, not asserted)" }
    );
    Ok(Outcome { text, ok })
}

fn cmd_roots(a: &RootsArgs) -> Result<Outcome> {
    let rep = codim::regime(a.k, a.m)?;
    let view = rep.view();
    let ok = view.descartes_consistent;
    if a.json {
        return Ok(Outcome { text: to_json(&view), ok });
    }
    let mut text = format!("h(p) = {}\nregime: {}\n", view.polynomial, serde_json::to_value(view.regime)?.as_str().unwrap_or(""));
    for r in &view.roots {
        text += &format!("root in [{}, {}] ~ {:.6}\n", r.lo, r.hi, r.mid);
    }
    text += &format!("p0 = {}", view.p0);
    Ok(Outcome { text, ok })
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaOutput {
    pub k: usize,
    pub m: usize,
    /// Linear multiplier `p + b`, as an exact rational.
    pub certificate_b: Option<String>,
    /// Smallest `n` making `(1 + p)^n h` coefficient-positive.
    pub multiplier_degree: Option<usize>,
    pub hk_at_m: String,
    pub threshold: Option<usize>,
    pub positive_roots: usize,
}

fn cmd_polya(a: &PolyaArgs) -> Result<Outcome> {
    let b = codim::polya_certificate(a.k, a.m)?;
    let roots = positive_roots(&codim::h_poly(a.k, a.m))?.len();
    let out = PolyaOutput {
        k: a.k,
        m: a.m,
        certificate_b: b.as_ref().map(format_rational),
        multiplier_degree: codim::polya_multiplier_degree(a.k, a.m, a.max_degree),
        hk_at_m: format_rational(&codim::hk_poly(a.k).eval(&BigRational::from_integer(a.m.into()))),
        threshold: codim::polya_threshold(a.k),
        positive_roots: roots,
    };
    // a certificate alongside a positive root would contradict the theory
    let ok = roots == 0 || (out.certificate_b.is_none() && out.multiplier_degree.is_none());
    if a.json {
        return Ok(Outcome { text: to_json(&out), ok });
    }
    let text = format!(
        "k={} m={}\nlinear certificate: {}\n(1+p)^n certificate: {}\nu^2 - v e_(k-2) at m: {}\nthreshold m: {}\npositive roots: {}",
        out.k,
        out.m,
        out.certificate_b.as_deref().map_or("none".to_string(), |b| format!("p + {b}")),
        out.multiplier_degree.map_or("none".to_string(), |n| format!("n = {n}")),
        out.hk_at_m,
        out.threshold.map_or("none".to_string(), |t| t.to_string()),
        out.positive_roots
    );
    Ok(Outcome { text, ok })
}

fn scalar_kind(v: &Value) -> Result<ScalarKind> {
    let first = v
        .get("tensors")
        .and_then(Value::as_array)
        .and_then(|t| t.first())
        .ok_or_else(|| Error::format("tensors", "missing or empty"))?;
    first
        .get("scalar")
        .and_then(Value::as_str)
        .and_then(ScalarKind::parse)
        .ok_or_else(|| Error::format("tensors[0].scalar", "expected \"rational\" or \"float\""))
}

fn convert_as<S: Scalar>(v: &Value, to: Target) -> Result<Value> {
    let seq = TensorSequence::<S>::from_json(v)?;
    let out = match to {
        Target::Cumulants => moments_to_cumulants(&seq)?,
        Target::Moments => cumulants_to_moments(&seq)?,
    };
    Ok(out.to_json())
}

fn cmd_convert(a: &ConvertArgs) -> Result<Outcome> {
    let raw = fs::read_to_string(&a.input)?;
    let v: Value = serde_json::from_str(&raw)?;
    let out = match scalar_kind(&v)? {
        ScalarKind::Rational => convert_as::<BigRational>(&v, a.to)?,
        ScalarKind::Float => convert_as::<f64>(&v, a.to)?,
    };
    let text = if a.json { serde_json::to_string(&out)? } else { serde_json::to_string_pretty(&out)? };
    Ok(Outcome::ok(text))
}

/// `λ_ij = 1 / (1 + i - j)` on and below the diagonal.
pub fn default_loading(p: usize, m: usize) -> Result<LoadingMatrix<f64>> {
    let values = (1..=p)
        .flat_map(|i| (1..=m).map(move |j| if i >= j { 1.0 / (1 + i - j) as f64 } else { 0.0 }))
        .collect();
    LoadingMatrix::new(p, m, values, true)
}

fn read_loading(path: &PathBuf) -> Result<LoadingMatrix<f64>> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let rows = v.as_array().ok_or_else(|| Error::format("loading", "expected an array of rows"))?;
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.as_array()
                .and_then(|r| r.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
                .ok_or_else(|| Error::format(format!("loading[{i}]"), "expected an array of numbers"))
        })
        .collect::<Result<Vec<_>>>()?;
    LoadingMatrix::from_rows(rows, false).map_err(|e| Error::format("loading", e.to_string()))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let spec = a.model.spec()?;
    let loading = match &a.loading {
        Some(path) => read_loading(path)?,
        None => default_loading(spec.p, spec.m)?,
    };
    let config = SimConfig {
        spec,
        factor_dist: a.dist,
        noise_dist: a.noise_dist,
        loading,
        samples: a.samples,
        seed: a.seed,
    };
    let rep = simulate::validate(&config)?;
    let ok = rep.flag != Flag::Fail;
    if a.json {
        return Ok(Outcome { text: to_json(&rep), ok });
    }
    let mut text = format!(
        "k={} p={} m={} factors={} noise={} samples={} seed={}\n",
        rep.k, rep.p, rep.m, rep.factor_dist, rep.noise_dist, rep.samples, rep.seed
    );
    for o in &rep.orders {
        text += &format!(
            "order {}: max |dev| {:.4e}, max normalized {:.3} [{}]\n",
            o.order,
            o.max_deviation,
            o.max_normalized,
            serde_json::to_value(o.flag)?.as_str().unwrap_or("")
        );
    }
    text += &format!("overall: {}", serde_json::to_value(rep.flag)?.as_str().unwrap_or(""));
    Ok(Outcome { text, ok })
}

/// One row of the dimension sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub p: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub params: i64,
    #[serde(rename = "N")]
    pub ambient: i64,
    pub dim: i64,
    pub codim: i64,
    pub h_value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_observed: Option<usize>,
}

fn sweep_cell(k: usize, p: usize, m: usize, with_rank: bool, seed: u64) -> Result<SweepRow> {
    let spec = ModelSpec::new(p, m, k)?;
    let d = dims(&spec);
    let rank_observed = if with_rank && p >= m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((k as u64) << 32) | ((p as u64) << 16) | m as u64);
        let point = jacobian::random_integer_point(&spec, &mut rng)?;
        Some(jacobian::rank_modp(&point, PRIMES[0], false)?.computed_rank)
    } else {
        None
    };
    Ok(SweepRow {
        k,
        p,
        m,
        params: d.params,
        ambient: d.ambient,
        dim: d.dim,
        codim: d.codim,
        h_value: codim::h_value(k, m, p).to_string(),
        rank_observed,
    })
}

fn write_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    if a.regimes {
        let cells: Vec<(usize, usize)> = a.k_range.clone().flat_map(|k| a.m_range.clone().map(move |m| (k, m))).collect();
        let rows = par::map(cells, |(k, m)| codim::regime_row(k, m)).into_iter().collect::<Result<Vec<RegimeRow>>>()?;
        let text = if a.json {
            to_json(&rows)
        } else {
            write_csv(&rows, &["k", "m", "root_count", "roots", "p0", "certificate_b"])?
        };
        return Ok(Outcome::ok(text));
    }
    let cells: Vec<(usize, usize, usize)> = a
        .k_range
        .clone()
        .flat_map(|k| a.p_range.clone().flat_map(move |p| a.m_range.clone().map(move |m| (k, p, m))))
        .collect();
    let rows = par::map(cells, |(k, p, m)| sweep_cell(k, p, m, a.with_rank, a.seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if a.json {
        return Ok(Outcome::ok(to_json(&rows)));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k", "p", "m", "M", "N", "dim", "codim", "h_value"];
    if a.with_rank {
        header.push("rank_observed");
    }
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![
            r.k.to_string(),
            r.p.to_string(),
            r.m.to_string(),
            r.params.to_string(),
            r.ambient.to_string(),
            r.dim.to_string(),
            r.codim.to_string(),
            r.h_value.clone(),
        ];
        if a.with_rank {
            rec.push(r.rank_observed.map(|x| x.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(Outcome::ok(String::from_utf8(bytes).expect("csv output is utf-8")))
}
