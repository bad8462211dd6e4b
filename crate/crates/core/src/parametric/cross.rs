//! Arrow-shaped matrices: a diagonal of marginals `β_i` and couplings `α_i`
//! only between coordinate `i < d` and the last coordinate.

use serde::Serialize;

use super::{check_unit, ParametricError};
use crate::matrix::{CandidateMatrix, MatrixError};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossParams {
    /// `β_1..β_d`.
    pub betas: Vec<f64>,
    /// `α_1..α_{d−1}`.
    pub alphas: Vec<f64>,
}

impl CrossParams {
    pub fn new(betas: Vec<f64>, alphas: Vec<f64>) -> Result<Self, ParametricError> {
        if betas.len() < 2 || alphas.len() + 1 != betas.len() {
            return Err(ParametricError::InvalidParameter(
                "need d ≥ 2 marginals and d − 1 couplings".into(),
            ));
        }
        for &x in betas.iter().chain(&alphas) {
            check_unit("entry", x)?;
        }
        Ok(Self { betas, alphas })
    }

    pub fn d(&self) -> usize {
        self.betas.len()
    }

    pub fn matrix(&self) -> Result<CandidateMatrix, MatrixError> {
        let d = self.d();
        CandidateMatrix::from_fn(d, |i, j| match (i, j) {
            _ if i == j => self.betas[i],
            _ if j == d - 1 => self.alphas[i],
            _ if i == d - 1 => self.alphas[j],
            _ => 0.0,
        })
    }
}

/// `0 ≤ α_i ≤ β_i`, `Σα ≤ β_d` and `Σβ − Σα ≤ 1`.
pub fn cross_bcm_member(p: &CrossParams) -> bool {
    let tau = tolerance();
    let sa: f64 = p.alphas.iter().sum();
    let sb: f64 = p.betas.iter().sum();
    p.alphas.iter().zip(&p.betas).all(|(a, b)| *a >= -tau && *a <= b + tau)
        && sa <= p.betas[p.d() - 1] + tau
        && sb - sa <= 1.0 + tau
}

/// Unit-diagonal version: `α_i ≥ 0` and `Σα ≤ 1`.
pub fn cross_tdm_member(alphas: &[f64]) -> bool {
    let tau = tolerance();
    alphas.iter().all(|&a| a >= -tau) && alphas.iter().sum::<f64>() <= 1.0 + tau
}
