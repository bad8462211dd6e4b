//! Column generation for the max-norm distance of a matrix to `B_d`.
//!
//! The restricted master is
//! `min t  s.t.  Σ x_v = 1,  −t ≤ (Σ x_v a_v − p)_i ≤ t  (i ≥ 1),  x, t ≥ 0`
//! over a growing vertex set. New vertices are priced by maximizing a binary
//! quadratic `v^T G v` built from the master duals, either exactly (Gray-code
//! sweep) or through a concave box relaxation shifted by `λ_max(G)`.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::exact::{caratheodory_reduce, vertex_dots, Certificate, MembershipVerdict, MethodTag};
use crate::lp::{ColumnSource, LpError, RevisedSimplex, SimplexConfig, SimplexStatus};
use crate::matrix::{moment_len, pair_index, pairs, vertices_in_order, BinaryVertex, MatrixError, Mode, ValidatedMatrix};
use crate::tolerance;

/// Largest `d` for exhaustive pricing.
pub const EXACT_PRICING_CAP: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColgenError {
    #[error("iteration limit reached; distance lies in [{lower}, {upper}]")]
    IterationLimit { lower: f64, upper: f64 },
    #[error("relaxed pricing found no column and d = {d} is too large for exact pricing; distance lies in [{lower}, {upper}]")]
    PricingUndecided { d: usize, lower: f64, upper: f64 },
    #[error("dimension {d} exceeds the exact pricing cap {cap}")]
    DimensionTooLarge { d: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected a BCM-mode matrix")]
    WrongMode,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PricingMode {
    ExactBqp,
    QpRelaxed,
    /// Relaxed pricing, with exact pricing every `k`-th iteration.
    Hybrid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColgenConfig {
    pub pricing: PricingMode,
    /// Spectral shift added to `λ_max` in the relaxation.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Projected-gradient steps of the relaxation.
    pub qp_steps: usize,
    /// Stop with a negative verdict as soon as the dual bound exceeds τ.
    pub early_exit: bool,
}

impl Default for ColgenConfig {
    fn default() -> Self {
        Self {
            pricing: PricingMode::Hybrid(10),
            epsilon: 1e-8,
            max_iterations: 10_000,
            qp_steps: 200,
            early_exit: true,
        }
    }
}

impl ColgenConfig {
    fn check(&self) -> Result<(), ColgenError> {
        if !(self.epsilon > 0.0) {
            return Err(ColgenError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.pricing == PricingMode::Hybrid(0) {
            return Err(ColgenError::InvalidConfig("hybrid period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Symmetric `G` with a constant offset: the reduced cost of vertex `v` is
/// `−(offset + v^T G v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingMatrix {
    d: usize,
    g: Vec<f64>,
    offset: f64,
}

impl PricingMatrix {
    pub fn from_fn(d: usize, offset: f64, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut g = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let x = f(i, j);
                g[i * d + j] = x;
                g[j * d + i] = x;
            }
        }
        Self { d, g, offset }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.d + j]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `v^T G v`.
    pub fn value(&self, v: BinaryVertex) -> f64 {
        let idx: Vec<usize> = (0..self.d).filter(|&i| v.get(i)).collect();
        idx.iter().map(|&i| idx.iter().map(|&j| self.get(i, j)).sum::<f64>()).sum()
    }

    fn gershgorin(&self) -> f64 {
        (0..self.d)
            .map(|i| self.get(i, i) + (0..self.d).filter(|&j| j != i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn abs_row_bound(&self) -> f64 {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Folds a dual vector `w` over the rows of `C_d` into `G`: `G_ii = w_i`,
/// `G_ij = w_{ij}/2`, offset `w_0`, so that `w^T a_v = offset + v^T G v`.
pub fn assemble_pricing_matrix(d: usize, w: &[f64]) -> PricingMatrix {
    assert_eq!(w.len(), moment_len(d), "dual length must be d(d+1)/2 + 1");
    PricingMatrix::from_fn(d, w[0], |i, j| if i == j { w[1 + i] } else { w[pair_index(d, i, j)] / 2.0 })
}

/// Global maximizer of `v^T G v` over `{0,1}^d` by a Gray-code sweep with
/// `O(d)` incremental updates. Ties keep the first vertex reached.
pub fn pricing_exact(g: &PricingMatrix) -> Result<(BinaryVertex, f64), ColgenError> {
    let d = g.d;
    if d > EXACT_PRICING_CAP {
        return Err(ColgenError::DimensionTooLarge {
            d,
            cap: EXACT_PRICING_CAP,
        });
    }
    // h[i] = Σ_{j ∈ S, j ≠ i} G_ij
    let mut h = vec![0.0; d];
    let mut s = 0u64;
    let mut value = 0.0;
    let mut best = (0.0, 0u64);
    for k in 1..1u64 << d {
        let i = k.trailing_zeros() as usize;
        let gain = g.get(i, i) + 2.0 * h[i];
        let row = &g.g[i * d..(i + 1) * d];
        let sign = if s >> i & 1 == 1 { -1.0 } else { 1.0 };
        value += sign * gain;
        for (j, (hj, gij)) in h.iter_mut().zip(row).enumerate() {
            if j != i {
                *hj += sign * gij;
            }
        }
        s ^= 1 << i;
        if value > best.0 {
            best = (value, s);
        }
    }
    let v = BinaryVertex::from_mask(d, best.1);
    Ok((v, g.value(v)))
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("Jacobi iteration did not converge; Gershgorin bound {gershgorin}")]
pub struct NoConvergence {
    pub gershgorin: f64,
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn eigen_max_symmetric(g: &PricingMatrix) -> Result<f64, NoConvergence> {
    let n = g.d;
    if n == 0 {
        return Ok(0.0);
    }
    let mut a = g.g.clone();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm.max(1e-300) {
            return Ok((0..n).map(|i| a[i * n + i]).fold(f64::NEG_INFINITY, f64::max));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(NoConvergence {
        gershgorin: g.gershgorin(),
    })
}

/// Heuristic pricing: maximize the concave surrogate
/// `p^T (G − fI) p + f Σ p`, `f = λ_max(G) + ε`, over `[0,1]^d` by projected
/// gradient ascent from `p = ½`, then round (ties to 1). Returns the rounded
/// vertex and its exact value `v^T G v`.
pub fn pricing_qp_relaxed(g: &PricingMatrix, epsilon: f64, steps: usize) -> (BinaryVertex, f64) {
    let d = g.d;
    let lambda = eigen_max_symmetric(g).unwrap_or_else(|e| e.gershgorin);
    let f = lambda + epsilon;
    // The gradient is Lipschitz with constant 2‖G − fI‖ ≤ 2(‖G‖_∞ + |f|).
    let step = 1.0 / (2.0 * (g.abs_row_bound() + f.abs()).max(1e-12));
    let mut p = vec![0.5; d];
    let mut grad = vec![0.0; d];
    for _ in 0..steps {
        for i in 0..d {
            let gp: f64 = (0..d).map(|j| g.get(i, j) * p[j]).sum();
            grad[i] = 2.0 * (gp - f * p[i]) + f;
        }
        for i in 0..d {
            p[i] = (p[i] + step * grad[i]).clamp(0.0, 1.0);
        }
    }
    let bits = p.iter().enumerate().filter(|(_, &x)| x >= 0.5).fold(0u64, |acc, (i, _)| acc | 1 << i);
    let v = BinaryVertex::from_mask(d, bits);
    (v, g.value(v))
}

/// Lower bound on the distance: the convexity row caps the total mass any
/// improving combination of columns can carry at 1.
pub fn dual_bound(master_objective: f64, min_reduced_cost: f64) -> f64 {
    master_objective + min_reduced_cost.min(0.0)
}

/// Zero vertex, singletons, pairs and the all-ones vertex, deduplicated.
pub fn initial_vertex_set(d: usize) -> Vec<BinaryVertex> {
    let mut out = vec![BinaryVertex::zero(d)];
    out.extend((0..d).map(|i| BinaryVertex::from_indices(d, &[i])));
    out.extend(pairs(d).map(|(i, j)| BinaryVertex::from_indices(d, &[i, j])));
    out.push(BinaryVertex::ones(d));
    let mut seen = std::collections::HashSet::new();
    out.retain(|v| seen.insert(*v));
    out
}

/// Master columns: `t`, the `u`-slacks, the `l`-slacks, then one column per
/// vertex.
#[derive(Debug, Clone)]
struct MasterColumns {
    d: usize,
    /// Moment rows excluding the constant row.
    k: usize,
    vertices: Vec<BinaryVertex>,
    w: std::cell::RefCell<Vec<f64>>,
}

impl MasterColumns {
    fn new(d: usize, vertices: Vec<BinaryVertex>) -> Self {
        Self {
            d,
            k: moment_len(d) - 1,
            vertices,
            w: std::cell::RefCell::new(vec![0.0; moment_len(d)]),
        }
    }

    fn fixed(&self) -> usize {
        1 + 2 * self.k
    }

    /// Collapses master duals onto the rows of `C_d`.
    fn aggregate(&self, y: &[f64], w: &mut [f64]) {
        w[0] = y[0];
        for i in 0..self.k {
            w[1 + i] = y[1 + i] + y[1 + self.k + i];
        }
    }
}

impl ColumnSource for MasterColumns {
    fn num_rows(&self) -> usize {
        1 + 2 * self.k
    }

    fn num_cols(&self) -> usize {
        self.fixed() + self.vertices.len()
    }

    fn fill_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let k = self.k;
        if j == 0 {
            out[1..=k].iter_mut().for_each(|x| *x = -1.0);
            out[k + 1..].iter_mut().for_each(|x| *x = 1.0);
        } else if j <= k {
            out[j] = 1.0;
        } else if j < self.fixed() {
            out[j] = -1.0;
        } else {
            let col = self.vertices[j - self.fixed()].column();
            out[0] = 1.0;
            for i in 0..k {
                let c = col[1 + i] as f64;
                out[1 + i] = c;
                out[1 + k + i] = c;
            }
        }
    }

    fn dots(&self, y: &[f64], out: &mut [f64]) {
        let k = self.k;
        let f = self.fixed();
        out[0] = -y[1..=k].iter().sum::<f64>() + y[k + 1..].iter().sum::<f64>();
        out[1..=k].copy_from_slice(&y[1..=k]);
        for j in k + 1..f {
            out[j] = -y[j];
        }
        let mut w = self.w.borrow_mut();
        self.aggregate(y, &mut w);
        vertex_dots(self.d, &self.vertices, &w, &mut out[f..]);
    }
}

fn master(d: usize, vertices: Vec<BinaryVertex>, p: &[f64]) -> Result<RevisedSimplex<MasterColumns>, LpError> {
    let src = MasterColumns::new(d, vertices);
    let k = src.k;
    let n = src.num_cols();
    let mut cost = vec![0.0; n];
    cost[0] = 1.0;
    let mut rhs = vec![1.0];
    rhs.extend_from_slice(&p[1..]);
    rhs.extend_from_slice(&p[1..]);
    let zero_col = src.vertices.iter().position(|v| v.bits() == 0).map(|i| i + src.fixed());
    let mut s = RevisedSimplex::new(src, cost, rhs, SimplexConfig::default())?;
    // Crash basis: all mass on the zero vertex, t = max p_i.
    if let Some(z) = zero_col {
        let arg = (0..k).max_by(|&a, &b| p[1 + a].total_cmp(&p[1 + b])).unwrap_or(0);
        let mut basis = vec![z, 0];
        basis.extend(1..=k);
        basis.extend((0..k).filter(|&i| i != arg).map(|i| 1 + k + i));
        s.set_basis(&basis);
    }
    Ok(s)
}

/// Result of [`check_membership_colgen`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColgenOutcome {
    /// Master objective at termination: the distance when the run ended by
    /// optimality, an upper bound after an early exit.
    pub distance: f64,
    /// Best dual bound seen (a lower bound on the distance).
    pub lower_bound: f64,
    pub verdict: MembershipVerdict,
    pub iterations: usize,
    pub pricing_calls_exact: usize,
    pub pricing_calls_relaxed: usize,
    pub pricing_time_fraction: f64,
    pub columns: usize,
    pub early_exit: bool,
}

/// Column-generation membership test for a BCM-mode matrix.
pub fn check_membership_colgen(b: &ValidatedMatrix, cfg: &ColgenConfig) -> Result<ColgenOutcome, ColgenError> {
    if b.mode() != Mode::Bcm {
        return Err(ColgenError::WrongMode);
    }
    cfg.check()?;
    let start = Instant::now();
    let tau = tolerance();
    let d = b.d();
    let m = moment_len(d);
    let p = b.matrix().moments();
    let initial = initial_vertex_set(d);
    let mut present: std::collections::HashSet<BinaryVertex> = initial.iter().copied().collect();
    let mut s = master(d, initial, &p)?;
    let mut w = vec![0.0; m];
    let mut lower = 0.0f64;
    let mut calls_exact = 0;
    let mut calls_relaxed = 0;
    let mut pricing_time = Duration::ZERO;
    let mut iterations = 0;
    let mut last_obj = f64::INFINITY;

    let finish = |s: &mut RevisedSimplex<MasterColumns>,
                  obj: f64,
                  lower: f64,
                  ray: Option<Vec<f64>>,
                  iterations: usize,
                  calls: (usize, usize),
                  pricing_time: Duration,
                  early: bool|
     -> Result<ColgenOutcome, ColgenError> {
        let verdict = match ray {
            None => {
                let fixed = s.source().fixed();
                let mut cert = Certificate::default();
                let mut basic = s.basic_values();
                basic.sort_by_key(|&(j, _)| j);
                for (j, x) in basic {
                    if j >= fixed && x > 1e-14 {
                        cert.vertices.push(s.source().vertices[j - fixed]);
                        cert.weights.push(x);
                    }
                }
                if cert.len() > m {
                    cert = caratheodory_reduce(d, &cert)?;
                }
                MembershipVerdict::member(MethodTag::Colgen, cert)
            }
            Some(r) => MembershipVerdict::non_member(MethodTag::Colgen, r),
        };
        let total = start.elapsed().as_secs_f64();
        Ok(ColgenOutcome {
            distance: obj,
            lower_bound: lower,
            verdict,
            iterations,
            pricing_calls_exact: calls.0,
            pricing_calls_relaxed: calls.1,
            pricing_time_fraction: if total > 0.0 { pricing_time.as_secs_f64() / total } else { 0.0 },
            columns: s.source().vertices.len(),
            early_exit: early,
        })
    };

    loop {
        let st = s.solve()?;
        if st != SimplexStatus::Optimal {
            return Err(LpError::NumericalBreakdown("master LP is not optimal".into()).into());
        }
        let obj = s.objective().max(0.0);
        debug_assert!(obj <= last_obj + 1e-9, "master objective increased");
        last_obj = obj;
        if obj <= tau {
            return finish(&mut s, obj, lower, None, iterations, (calls_exact, calls_relaxed), pricing_time, false);
        }
        if iterations >= cfg.max_iterations {
            return Err(ColgenError::IterationLimit { lower, upper: obj });
        }
        iterations += 1;
        let y = s.duals();
        s.source().aggregate(&y, &mut w);
        let g = assemble_pricing_matrix(d, &w);

        let use_exact = match cfg.pricing {
            PricingMode::ExactBqp => true,
            PricingMode::QpRelaxed => false,
            PricingMode::Hybrid(k) => iterations % k == 0,
        };
        let t0 = Instant::now();
        let mut chosen = None;
        if !use_exact {
            calls_relaxed += 1;
            let (v, val) = pricing_qp_relaxed(&g, cfg.epsilon, cfg.qp_steps);
            if g.offset() + val > tau && !present.contains(&v) {
                chosen = Some(v);
            }
        }
        let mut exact_result = None;
        if chosen.is_none() {
            if d > EXACT_PRICING_CAP {
                pricing_time += t0.elapsed();
                return Err(ColgenError::PricingUndecided { d, lower, upper: obj });
            }
            calls_exact += 1;
            let (v, val) = pricing_exact(&g)?;
            exact_result = Some((v, g.offset() + val));
        }
        pricing_time += t0.elapsed();

        if let Some((v, violation)) = exact_result {
            let bound = dual_bound(obj, -violation);
            lower = lower.max(bound);
            let converged = violation <= tau || present.contains(&v);
            if converged || (cfg.early_exit && bound > tau) {
                // r = −w + max(0, violation)·e_0 satisfies r^T a_v ≥ 0 for all v
                // and p^T r = −bound.
                let mut r: Vec<f64> = w.iter().map(|x| -x).collect();
                r[0] += violation.max(0.0);
                let scale = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if scale > 0.0 {
                    r.iter_mut().for_each(|x| *x /= scale);
                }
                let early = !converged;
                let reported_lower = if converged { obj.max(lower) } else { lower };
                return finish(
                    &mut s,
                    obj,
                    reported_lower,
                    Some(r),
                    iterations,
                    (calls_exact, calls_relaxed),
                    pricing_time,
                    early,
                );
            }
            chosen = Some(v);
        }
        let v = chosen.expect("a column was chosen");
        present.insert(v);
        s.add_columns(|src| src.vertices.push(v), &[0.0])?;
    }
}

/// Max-norm distance from `B` to `B_d` by solving the master over all `2^d`
/// vertices at once.
pub fn distance_full(b: &ValidatedMatrix) -> Result<f64, ColgenError> {
    let d = b.d();
    let p = b.matrix().moments();
    let mut s = master(d, vertices_in_order(d)?, &p)?;
    if s.solve()? != SimplexStatus::Optimal {
        return Err(LpError::NumericalBreakdown("full master LP is not optimal".into()).into());
    }
    Ok(s.objective().max(0.0))
}
