//! Symmetric Toeplitz TDMs: the interval construction under monotone
//! differences, the banded (m-dependent) reduced LP and the two-dependent
//! family.

use serde::Serialize;

use super::{check_unit, ParametricError};
use crate::exact::{feasibility_over, MembershipVerdict, MethodTag};
use crate::matrix::{moment_len, pair_index, AtomVector, BinaryVertex, CandidateMatrix, MatrixError, MAX_DIM};
use crate::tolerance;

/// `α_1..α_{d−1}`, the lag-`k` entries of a unit-diagonal Toeplitz matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToeplitzParams {
    pub alphas: Vec<f64>,
}

impl ToeplitzParams {
    pub fn new(alphas: Vec<f64>) -> Result<Self, ParametricError> {
        for &a in &alphas {
            check_unit("alpha", a)?;
        }
        if alphas.len() + 1 > MAX_DIM {
            return Err(ParametricError::UnsupportedDimension { d: alphas.len() + 1 });
        }
        Ok(Self { alphas })
    }

    pub fn d(&self) -> usize {
        self.alphas.len() + 1
    }

    /// `α_k` with `α_0 = 1`.
    pub fn lag(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.alphas[k - 1]
        }
    }

    pub fn matrix(&self) -> Result<CandidateMatrix, MatrixError> {
        CandidateMatrix::from_fn(self.d(), |i, j| self.lag(i.abs_diff(j)))
    }
}

/// `α_k = φ^k`.
pub fn ar1_toeplitz(phi: f64, d: usize) -> Result<ToeplitzParams, ParametricError> {
    ToeplitzParams::new((1..d).map(|k| phi.powi(k as i32)).collect())
}

/// `α_k = 2 − (1 + bk)^{1/θ}`; needs `θ ≥ 1` and `0 ≤ b(d−1) ≤ 1`.
pub fn falk_toeplitz(theta: f64, b: f64, d: usize) -> Result<ToeplitzParams, ParametricError> {
    if !(theta >= 1.0) || !(b >= 0.0) || b * (d as f64 - 1.0) > 1.0 {
        return Err(ParametricError::InvalidParameter("need θ ≥ 1 and 0 ≤ b(d−1) ≤ 1".into()));
    }
    ToeplitzParams::new((1..d).map(|k| 2.0 - (1.0 + b * k as f64).powf(1.0 / theta)).collect())
}

/// Sufficient condition `1 − α_1 ≥ α_1 − α_2 ≥ … ≥ α_{d−2} − α_{d−1} ≥ 0`
/// (with `α_{d−1} ≥ 0`).
pub fn toeplitz_sufficient(p: &ToeplitzParams) -> bool {
    let tau = tolerance();
    let d = p.d();
    if d >= 2 && p.lag(d - 1) < -tau {
        return false;
    }
    let diffs: Vec<f64> = (0..d.saturating_sub(1)).map(|k| p.lag(k) - p.lag(k + 1)).collect();
    diffs.iter().all(|&x| x >= -tau) && diffs.windows(2).all(|w| w[0] >= w[1] - tau)
}

/// Whether appending `α_d = 0` keeps the sufficient condition: holds when it
/// holds now and `α_{d−1} ≤ α_{d−2}/2`.
pub fn toeplitz_extends(p: &ToeplitzParams) -> bool {
    let d = p.d();
    d >= 2 && toeplitz_sufficient(p) && p.lag(d - 1) <= p.lag(d - 2) / 2.0 + tolerance()
}

/// Atom masses of `T/d` from the interval construction on `[0, 1)`: event
/// `i` is `[0, α_i/d)` together with `[j/d, (j + α_{i−j} − α_{i−j+1})/d)` for
/// `1 ≤ j ≤ i`.
pub fn toeplitz_witness(p: &ToeplitzParams) -> Result<AtomVector, ParametricError> {
    if !toeplitz_sufficient(p) {
        return Err(ParametricError::PreconditionFailed(
            "lag differences are not non-increasing and nonnegative".into(),
        ));
    }
    let d = p.d();
    let df = d as f64;
    let mut intervals: Vec<Vec<(f64, f64)>> = vec![Vec::new(); d];
    for (i, iv) in intervals.iter_mut().enumerate() {
        iv.push((0.0, p.lag(i) / df));
        for j in 1..=i {
            let len = (p.lag(i - j) - p.lag(i - j + 1)).max(0.0);
            iv.push((j as f64 / df, (j as f64 + len) / df));
        }
    }
    let mut cuts: Vec<f64> = intervals.iter().flatten().flat_map(|&(a, b)| [a, b]).collect();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut q = AtomVector::new(d);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let bits = intervals
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.iter().any(|&(a, b)| a <= mid && mid < b))
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        q.add(BinaryVertex::new(d, bits)?, hi - lo);
    }
    Ok(q.pruned(1e-15))
}

/// Vertices whose support fits in `m + 1` consecutive coordinates, plus the
/// zero vertex: the only atoms an `m`-banded BCM can charge.
pub fn m_dependence_support(d: usize, m: usize) -> Vec<BinaryVertex> {
    let mut out = vec![BinaryVertex::zero(d)];
    for k in 0..d {
        let width = m.min(d - 1 - k);
        for mask in 0..1u64 << width {
            out.push(BinaryVertex::from_mask(d, 1 << k | mask << (k + 1)));
        }
    }
    out
}

/// Exact membership of an `m`-banded Toeplitz TDM by the LP restricted to
/// [`m_dependence_support`]. A negative verdict's ray is lifted to all of
/// `C_d` by loading the out-of-band pair rows.
pub fn m_dependence_check(p: &ToeplitzParams, m: usize) -> Result<MembershipVerdict, ParametricError> {
    let d = p.d();
    if (m + 1..d).any(|k| p.lag(k) != 0.0) {
        return Err(ParametricError::PreconditionFailed(format!("lags beyond {m} must be zero")));
    }
    let b = p.matrix()?.scaled(1.0 / d as f64);
    let moments = b.moments();
    match feasibility_over(d, m_dependence_support(d, m), &moments)? {
        Ok(cert) => Ok(MembershipVerdict::member(MethodTag::MDependence, cert)),
        Err(mut ray) => {
            // Every column outside the band hits at least one far pair row.
            let far: Vec<usize> = (0..d)
                .flat_map(|i| (i + m + 1..d).map(move |j| (i, j)))
                .map(|(i, j)| pair_index(d, i, j))
                .collect();
            let load: f64 = ray.iter().map(|x| x.abs()).sum();
            for &r in &far {
                ray[r] = load;
            }
            let scale = ray.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if scale > 0.0 {
                ray.iter_mut().for_each(|x| *x /= scale);
            }
            debug_assert_eq!(ray.len(), moment_len(d));
            Ok(MembershipVerdict::non_member(MethodTag::MDependence, ray))
        }
    }
}

/// Unit-diagonal Toeplitz matrix with lag-1 entry `α`, lag-2 entry `β`, zero
/// beyond.
pub fn two_dependence_matrix(alpha: f64, beta: f64, d: usize) -> Result<ToeplitzParams, ParametricError> {
    ToeplitzParams::new((1..d).map(|k| [alpha, beta].get(k - 1).copied().unwrap_or(0.0)).collect())
}

/// Exact region of the two-dependent family for each `d ≥ 3`.
pub fn two_dependence_member(alpha: f64, beta: f64, d: usize) -> Result<bool, ParametricError> {
    let t = tolerance();
    let extra = match d {
        0..=2 => return Err(ParametricError::UnsupportedDimension { d }),
        3 => beta <= 1.0 + t,
        4 => alpha + beta <= 1.0 + t,
        5 => beta <= 0.5 + t && alpha + beta <= 1.0 + t,
        _ => alpha + 4.0 * beta <= 2.0 + t,
    };
    Ok(extra && alpha >= -t && beta >= -t && 2.0 * alpha - beta <= 1.0 + t)
}

/// Atom masses of `T/d` for the two-dependent family, `d ≥ 6`, with
/// `κ = α/d`, `μ = β/d`, `ν = min(κ/2, μ)`.
pub fn two_dependence_witness(alpha: f64, beta: f64, d: usize) -> Result<AtomVector, ParametricError> {
    if !(6..=MAX_DIM).contains(&d) {
        return Err(ParametricError::UnsupportedDimension { d });
    }
    if !two_dependence_member(alpha, beta, d)? {
        return Err(ParametricError::PreconditionFailed(format!("({alpha}, {beta}) is outside the region")));
    }
    let df = d as f64;
    let (kappa, mu) = (alpha / df, beta / df);
    let nu = (kappa / 2.0).min(mu);
    let xi1 = 1.0 / df - kappa - mu + nu;
    let xi2 = 1.0 / df - 2.0 * kappa - mu + 2.0 * nu;
    let xi3 = 1.0 / df - 2.0 * kappa - 2.0 * mu + 3.0 * nu;
    let set = |idx: &[usize]| BinaryVertex::from_indices(d, idx);
    let mut q = AtomVector::new(d);
    for (v, w) in [
        (set(&[0]), xi1),
        (set(&[d - 1]), xi1),
        (set(&[0, 1]), kappa - nu),
        (set(&[d - 2, d - 1]), kappa - nu),
        (set(&[1]), xi2),
        (set(&[d - 2]), xi2),
    ] {
        q.add(v, w);
    }
    for k in 0..d - 2 {
        q.add(set(&[k, k + 2]), mu - nu);
        q.add(set(&[k, k + 1, k + 2]), nu);
    }
    for k in 1..d - 2 {
        q.add(set(&[k, k + 1]), kappa - 2.0 * nu);
    }
    for k in 2..d - 2 {
        q.add(set(&[k]), xi3);
    }
    let rest = 1.0 - q.total();
    q.add(BinaryVertex::zero(d), rest);
    Ok(q)
}

/// Weights `(a, b, c)` of the moving-maximum `max(c X_{i−2}, b X_{i−1}, a X_i)`
/// whose lag-1 and lag-2 coefficients are `α` and `β`.
pub fn moving_maxima_weights(alpha: f64, beta: f64) -> Result<(f64, f64, f64), ParametricError> {
    if !two_dependence_member(alpha, beta, 6)? {
        return Err(ParametricError::PreconditionFailed(format!("({alpha}, {beta}) is outside the region")));
    }
    Ok(if beta >= alpha / 2.0 {
        (beta, alpha / 2.0, 1.0 - alpha / 2.0 - beta)
    } else {
        (beta, alpha - beta, 1.0 - alpha)
    })
}
