//! Equi-correlation matrices `(α−β)I + βJ`.

use serde::Serialize;

use super::{check_unit, ParametricError};
use crate::matrix::{CandidateMatrix, MatrixError};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquiParams {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
}

impl EquiParams {
    pub fn new(alpha: f64, beta: f64, d: usize) -> Result<Self, ParametricError> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        if d < 2 {
            return Err(ParametricError::UnsupportedDimension { d });
        }
        Ok(Self { alpha, beta, d })
    }

    /// Diagonal `α`, off-diagonal `β`.
    pub fn matrix(&self) -> Result<CandidateMatrix, MatrixError> {
        CandidateMatrix::from_fn(self.d, |i, j| if i == j { self.alpha } else { self.beta })
    }
}

/// Smallest `β` for which the equi-correlation matrix with diagonal `α` lies
/// in `B_d`: `(2αd − k − 1)k / (d(d−1))` with `k = ⌊αd⌋`.
pub fn equi_beta_lower(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    let ad = alpha * d;
    let k = ad.floor();
    (2.0 * ad - k - 1.0) * k / (d * (d - 1.0))
}

/// `(α²d − α)/(d−1)`, the lower bound implied by nonnegativity of the
/// variance of `Σ 1_{A_i}`. It falls below [`equi_beta_lower`] by
/// `ε(1−ε)/(d(d−1))` where `ε` is the fractional part of `αd`.
pub fn equi_variance_bound(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    (alpha * alpha * d - alpha) / (d - 1.0)
}

/// `β_l(α) ≤ β ≤ α`, with τ slack on both sides.
pub fn equi_bcm_member(p: &EquiParams) -> bool {
    let tau = tolerance();
    p.beta >= equi_beta_lower(p.alpha, p.d) - tau && p.beta <= p.alpha + tau
}

/// A unit-diagonal matrix with constant off-diagonal `β` is a TDM exactly
/// when `β ∈ [0, 1]`.
pub fn equi_tdm_member(beta: f64) -> bool {
    (0.0..=1.0).contains(&beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spot_values() {
        assert!((equi_beta_lower(2.0 / 3.0, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((equi_beta_lower(0.5, 4) - 1.0 / 6.0).abs() < 1e-15);
        for d in 2..12 {
            assert!((equi_beta_lower(1.0, d) - 1.0).abs() < 1e-15);
            assert_eq!(equi_beta_lower(0.0, d), 0.0);
            assert_eq!(equi_beta_lower(1.0 / d as f64, d), 0.0);
        }
    }

    #[test]
    fn variance_bound_examples() {
        assert!((equi_variance_bound(0.75, 2) - 0.375).abs() < 1e-15);
        assert_eq!(equi_variance_bound(0.0, 5), 0.0);
        // Integer αd: both bounds agree.
        assert!((equi_variance_bound(0.5, 4) - equi_beta_lower(0.5, 4)).abs() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        assert!(equi_bcm_member(&EquiParams::new(1.0 / 3.0, 0.0, 3).unwrap()));
        assert!(!equi_bcm_member(&EquiParams::new(0.5, 0.1, 4).unwrap()));
        assert!(equi_bcm_member(&EquiParams::new(0.5, 1.0 / 6.0, 4).unwrap()));
        assert!(equi_tdm_member(0.0) && equi_tdm_member(1.0) && !equi_tdm_member(1.01));
        assert!(EquiParams::new(1.2, 0.0, 3).is_err());
        assert!(EquiParams::new(0.5, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn bounds_related_by_fractional_part(alpha in 0.0f64..=1.0, d in 2usize..40) {
            let df = d as f64;
            let eps = alpha * df - (alpha * df).floor();
            let gap = eps * (1.0 - eps) / (df * (df - 1.0));
            prop_assert!((equi_beta_lower(alpha, d) - equi_variance_bound(alpha, d) - gap).abs() < 1e-12);
        }

        #[test]
        fn comonotone_always_member(alpha in 0.0f64..=1.0, d in 2usize..40) {
            prop_assert!(equi_bcm_member(&EquiParams::new(alpha, alpha, d).unwrap()));
        }

        #[test]
        fn lower_bound_below_square(alpha in 0.0f64..=1.0, d in 2usize..40) {
            let b = equi_beta_lower(alpha, d);
            prop_assert!(b >= -1e-15 && b <= alpha * alpha + 1e-12);
            prop_assert!(b <= equi_beta_lower(alpha, d + 1) + 1e-12);
        }
    }
}
