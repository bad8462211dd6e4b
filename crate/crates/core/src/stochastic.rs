//! Max-stable process simulators, an empirical upper-tail dependence
//! estimator, and random instance generators for membership batteries.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): a 64-bit seed selects the
//! key and an instance index selects the stream, so instance `k` of a batch
//! never depends on how many instances precede it.

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::Certificate;
use crate::matrix::{BinaryVertex, CandidateMatrix, Mode, ValidatedMatrix, MAX_DIM};

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("weights must be nonnegative and sum to 1, got ({a}, {b}, {c})")]
    InvalidWeights { a: f64, b: f64, c: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("only {found} exceedances at u = {u}; need at least 100")]
    TooFewExceedances { found: f64, u: f64 },
    #[error("column index {index} out of range for width {d}")]
    ColumnOutOfRange { index: usize, d: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Deterministic generator for instance `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit Fréchet draw `−1/ln U`.
fn frechet(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    -1.0 / u.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    /// Rows of the sample matrix.
    pub n: usize,
    /// Columns: lags `0..d` of the path.
    pub d: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            burn_in: 1000,
            seed,
        }
    }

    fn check(&self) -> Result<(), StochasticError> {
        if self.n == 0 || self.d == 0 {
            return Err(StochasticError::InvalidConfig("n and d must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n × d` samples stored as one path: row `t` is `(X_t, …, X_{t+d−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    path: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleMatrix {
    pub fn from_path(path: Vec<f64>, d: usize) -> Result<Self, StochasticError> {
        if d == 0 || path.len() < d {
            return Err(StochasticError::InvalidConfig("path shorter than window".into()));
        }
        let n = path.len() + 1 - d;
        Ok(Self { path, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column(&self, k: usize) -> Result<&[f64], StochasticError> {
        if k >= self.d {
            return Err(StochasticError::ColumnOutOfRange { index: k, d: self.d });
        }
        Ok(&self.path[k..k + self.n])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), StochasticError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record((0..self.d).map(|k| format!("x{k}")))?;
        for t in 0..self.n {
            out.write_record(self.path[t..t + self.d].iter().map(|x| x.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Stationary max-autoregression `X_k = max(φ X_{k−1}, Z_k)` with unit
/// Fréchet innovations; lag-`k` tail dependence is `φ^k`.
pub fn simulate_ar1_max(phi: f64, cfg: &SimConfig) -> Result<SampleMatrix, StochasticError> {
    cfg.check()?;
    if !(0.0..1.0).contains(&phi) {
        return Err(StochasticError::InvalidConfig(format!("φ = {phi} is outside [0, 1)")));
    }
    let mut rng = rng_for(cfg.seed, 0);
    let len = cfg.n + cfg.d - 1;
    let mut x = frechet(&mut rng) / (1.0 - phi);
    for _ in 0..cfg.burn_in {
        x = (phi * x).max(frechet(&mut rng));
    }
    let mut path = Vec::with_capacity(len);
    for _ in 0..len {
        x = (phi * x).max(frechet(&mut rng));
        path.push(x);
    }
    SampleMatrix::from_path(path, cfg.d)
}

/// Moving maximum `Y_i = max(c X_{i−2}, b X_{i−1}, a X_i)` of unit Fréchet
/// noise, with `a + b + c = 1`.
pub fn simulate_two_dependent(a: f64, b: f64, c: f64, cfg: &SimConfig) -> Result<SampleMatrix, StochasticError> {
    cfg.check()?;
    if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(StochasticError::InvalidWeights { a, b, c });
    }
    let mut rng = rng_for(cfg.seed, 0);
    let len = cfg.n + cfg.d - 1;
    let (mut x2, mut x1) = (frechet(&mut rng), frechet(&mut rng));
    let mut path = Vec::with_capacity(len);
    for _ in 0..len {
        let x0 = frechet(&mut rng);
        path.push((c * x2).max(b * x1).max(a * x0));
        (x2, x1) = (x1, x0);
    }
    SampleMatrix::from_path(path, cfg.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TdcEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p̂(1 − p̂)/k)` with `k = un` exceedances.
    pub std_error: f64,
    pub exceedances: usize,
}

/// Value with exactly `k` larger sample values (`k ≥ 1`).
fn upper_threshold(x: &[f64], k: usize) -> f64 {
    let mut v = x.to_vec();
    let idx = v.len() - k - 1;
    let (_, t, _) = v.select_nth_unstable_by(idx, f64::total_cmp);
    *t
}

/// Fraction of the `un` largest values of column `i` whose partner in column
/// `j` is also among the `un` largest of its column.
pub fn empirical_tdc(samples: &SampleMatrix, i: usize, j: usize, u: f64) -> Result<TdcEstimate, StochasticError> {
    if !(u > 0.0 && u < 0.5) {
        return Err(StochasticError::InvalidConfig(format!("u = {u} is outside (0, 0.5)")));
    }
    let found = u * samples.n() as f64;
    if found < 100.0 {
        return Err(StochasticError::TooFewExceedances { found, u });
    }
    let k = found.round() as usize;
    let (xi, xj) = (samples.column(i)?, samples.column(j)?);
    let (ti, tj) = (upper_threshold(xi, k), upper_threshold(xj, k));
    let both = xi.iter().zip(xj).filter(|&(&a, &b)| a > ti && b > tj).count();
    let p = both as f64 / k as f64;
    Ok(TdcEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / k as f64).sqrt(),
        exceedances: k,
    })
}

/// A random BCM together with the convex combination that produced it.
#[derive(Debug, Clone)]
pub struct Class3Instance {
    pub matrix: ValidatedMatrix,
    pub certificate: Certificate,
}

/// A generated instance and the vertex added on top of it.
#[derive(Debug, Clone)]
pub struct Class5Instance {
    pub matrix: CandidateMatrix,
    pub first_vertex: BinaryVertex,
    /// Some entry exceeds 1, so the matrix cannot pass validation.
    pub out_of_range: bool,
}

fn check_dim(d: usize) -> Result<(), StochasticError> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(StochasticError::InvalidConfig(format!("d = {d} must lie in 2..={MAX_DIM}")));
    }
    Ok(())
}

/// `N ~ U{d², …, d⁴}` vertices drawn uniformly with replacement, weights
/// from the flat Dirichlet (normalized unit exponentials).
pub fn gen_class3_stream(d: usize, seed: u64, index: u64) -> Result<Class3Instance, StochasticError> {
    check_dim(d)?;
    let mut rng = rng_for(seed, index);
    let n = rng.random_range(d * d..=d.pow(4).min(1 << 24));
    let mask = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    let mut cert = Certificate::default();
    for _ in 0..n {
        let v = BinaryVertex::new(d, rng.random::<u64>() & mask).expect("masked to d bits");
        let u: f64 = rng.sample(Open01);
        cert.vertices.push(v);
        cert.weights.push(-u.ln());
    }
    let total: f64 = cert.weights.iter().sum();
    cert.weights.iter_mut().for_each(|w| *w /= total);
    let matrix = cert
        .matrix(d)
        .validate(Mode::Bcm)
        .expect("convex combinations of vertices are valid BCMs");
    Ok(Class3Instance {
        matrix,
        certificate: cert,
    })
}

pub fn gen_class3(d: usize, seed: u64) -> Result<Class3Instance, StochasticError> {
    gen_class3_stream(d, seed, 0)
}

/// `A + v_1 v_1^T / d` for a class-3 matrix `A` with first vertex `v_1`.
pub fn gen_class5_stream(d: usize, seed: u64, index: u64) -> Result<Class5Instance, StochasticError> {
    let base = gen_class3_stream(d, seed, index)?;
    let v = base.certificate.vertices[0];
    let a = base.matrix.matrix();
    let m = CandidateMatrix::from_fn(d, |i, j| a.get(i, j) + if v.get(i) && v.get(j) { 1.0 / d as f64 } else { 0.0 })
        .expect("valid dimension");
    let out_of_range = m.entries().iter().any(|&x| x > 1.0);
    Ok(Class5Instance {
        matrix: m,
        first_vertex: v,
        out_of_range,
    })
}

pub fn gen_class5(d: usize, seed: u64) -> Result<Class5Instance, StochasticError> {
    gen_class5_stream(d, seed, 0)
}
