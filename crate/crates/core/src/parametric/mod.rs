//! Closed-form and small-LP membership tests for structured matrix families,
//! together with explicit witness constructions.

mod cross;
mod equi;
mod recognize;
mod toeplitz;
mod two_sector;

pub use cross::{cross_bcm_member, cross_tdm_member, CrossParams};
pub use equi::{equi_bcm_member, equi_beta_lower, equi_tdm_member, equi_variance_bound, EquiParams};
pub use recognize::{fast_path, recognize, Pattern};
pub use toeplitz::{
    ar1_toeplitz, falk_toeplitz, m_dependence_check, m_dependence_support, moving_maxima_weights,
    toeplitz_extends, toeplitz_sufficient, toeplitz_witness, two_dependence_matrix, two_dependence_member,
    two_dependence_witness, ToeplitzParams,
};
pub use two_sector::{
    facets_member, known_facets, known_vertices, two_sector_gamma_grid, two_sector_gamma_upper,
    two_sector_member, Facet, TwoSectorParams,
};

use thiserror::Error;

use crate::exact::Certificate;
use crate::lp::LpError;
use crate::matrix::{AtomVector, MatrixError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParametricError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("dimension {d} is not supported here")]
    UnsupportedDimension { d: usize },
    #[error("no stored data for (d1, d2) = ({d1}, {d2})")]
    UnknownCase { d1: usize, d2: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("LP returned an unexpected status: {0}")]
    LpStatus(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn check_unit(name: &str, x: f64) -> Result<(), ParametricError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ParametricError::InvalidParameter(format!("{name} = {x} is outside [0, 1]")))
    }
}

/// Converts atom masses into a certificate, dropping masses at or below
/// `1e-15`.
pub fn atoms_to_certificate(q: &AtomVector) -> Certificate {
    let mut c = Certificate::default();
    for (v, w) in q.iter().filter(|&(_, w)| w > 1e-15) {
        c.vertices.push(v);
        c.weights.push(w);
    }
    c
}
