//! Full-enumeration membership oracle, certificates and their verification.

use serde::Serialize;
use thiserror::Error;

use crate::colgen::{self, ColgenConfig, ColgenError};
use crate::lp::{ColumnSource, LpError, RevisedSimplex, SimplexConfig};
use crate::matrix::{
    as_bcm, moment_len, vertices_in_order, BinaryVertex, CandidateMatrix, MatrixError, Mode,
    ValidatedMatrix,
};
use crate::symmetry::{self, SymmetryError};
use crate::tolerance;

/// Largest dimension accepted by [`check_bcm_full`].
pub const FULL_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("dimension {d} exceeds the full-enumeration cap {cap}; use column generation")]
    DimensionTooLarge { d: usize, cap: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Colgen(#[from] ColgenError),
}

/// Which procedure produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Full,
    Symmetric,
    Colgen,
    MDependence,
    Parametric,
}

/// Convex combination of vertices `Σ w_i v_i v_i^T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Certificate {
    pub vertices: Vec<BinaryVertex>,
    pub weights: Vec<f64>,
}

#[derive(Serialize)]
struct CertEntry {
    bits: BinaryVertex,
    weight: f64,
}

impl Serialize for Certificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.vertices.iter().zip(&self.weights).map(|(v, w)| CertEntry {
            bits: *v,
            weight: *w,
        }))
    }
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `Σ w_i v_i v_i^T`.
    pub fn matrix(&self, d: usize) -> CandidateMatrix {
        let mut e = vec![0.0; d * d];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            let idx: Vec<usize> = (0..d).filter(|&i| v.get(i)).collect();
            for &i in &idx {
                for &j in &idx {
                    e[i * d + j] += w;
                }
            }
        }
        CandidateMatrix::from_row_major(d, e).expect("valid dimension")
    }

    /// `Σ w_i a_{v_i}`, the moment vector the certificate represents.
    pub fn moments(&self, d: usize) -> Vec<f64> {
        let mut p = vec![0.0; moment_len(d)];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            for (pk, c) in p.iter_mut().zip(v.column()) {
                if c == 1 {
                    *pk += w;
                }
            }
        }
        p
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub member: bool,
    pub method: MethodTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(rename = "farkas", skip_serializing_if = "Option::is_none")]
    pub farkas_ray: Option<Vec<f64>>,
}

impl MembershipVerdict {
    pub fn member(method: MethodTag, certificate: Certificate) -> Self {
        Self {
            member: true,
            method,
            certificate: Some(certificate),
            farkas_ray: None,
        }
    }

    pub fn non_member(method: MethodTag, ray: Vec<f64>) -> Self {
        Self {
            member: false,
            method,
            certificate: None,
            farkas_ray: Some(ray),
        }
    }
}

/// Columns `a_v` of `C_d` for an explicit vertex list.
#[derive(Debug, Clone)]
pub struct VertexColumns {
    d: usize,
    vertices: Vec<BinaryVertex>,
}

impl VertexColumns {
    pub fn new(d: usize, vertices: Vec<BinaryVertex>) -> Self {
        Self { d, vertices }
    }

    pub fn vertices(&self) -> &[BinaryVertex] {
        &self.vertices
    }

    pub fn push(&mut self, v: BinaryVertex) {
        self.vertices.push(v);
    }
}

/// `y^T a_v` for every `v` in `vs`, given a dual over the rows of `C_d`.
pub(crate) fn vertex_dots(d: usize, vs: &[BinaryVertex], y: &[f64], out: &mut [f64]) {
    let mut idx = Vec::with_capacity(d);
    for (o, v) in out.iter_mut().zip(vs) {
        idx.clear();
        idx.extend((0..d).filter(|&i| v.get(i)));
        let mut s = y[0];
        for (a, &i) in idx.iter().enumerate() {
            s += y[1 + i];
            let base = pair_index_base(d, i);
            for &j in &idx[a + 1..] {
                s += y[base + j];
            }
        }
        *o = s;
    }
}

/// `pair_index(d, i, j) == pair_index_base(d, i) + j` for `j > i`.
#[inline]
pub(crate) fn pair_index_base(d: usize, i: usize) -> usize {
    1 + d + i * d - i * (i + 1) / 2 - i - 1
}

impl ColumnSource for VertexColumns {
    fn num_rows(&self) -> usize {
        moment_len(self.d)
    }

    fn num_cols(&self) -> usize {
        self.vertices.len()
    }

    fn fill_column(&self, j: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(self.vertices[j].column()) {
            *o = c as f64;
        }
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut o = [0.0];
        vertex_dots(self.d, &self.vertices[j..=j], y, &mut o);
        o[0]
    }

    fn dots(&self, y: &[f64], out: &mut [f64]) {
        vertex_dots(self.d, &self.vertices, y, out);
    }
}

/// Phase-I feasibility of `Σ x_v a_v = p, x ≥ 0` over the listed vertices.
/// Returns either a certificate (zero weights dropped) or a normalized Farkas
/// ray.
pub(crate) fn feasibility_over(
    d: usize,
    vertices: Vec<BinaryVertex>,
    p: &[f64],
) -> Result<Result<Certificate, Vec<f64>>, LpError> {
    let n = vertices.len();
    let src = VertexColumns::new(d, vertices);
    let mut s = RevisedSimplex::new(src, vec![0.0; n], p.to_vec(), SimplexConfig::default())?;
    if s.find_feasible()? {
        let mut cert = Certificate::default();
        let mut basic = s.basic_values();
        basic.sort_by_key(|&(j, _)| j);
        for (j, w) in basic {
            if w > 1e-14 {
                cert.vertices.push(s.source().vertices()[j]);
                cert.weights.push(w);
            }
        }
        Ok(Ok(cert))
    } else {
        Ok(Err(s.farkas().expect("ray stored").to_vec()))
    }
}

fn require_bcm(b: &ValidatedMatrix) -> Result<(), ExactError> {
    if b.mode() != Mode::Bcm {
        return Err(MatrixError::WrongMode {
            expected: Mode::Bcm,
            actual: b.mode(),
        }
        .into());
    }
    Ok(())
}

/// Decides `B ∈ B_d` by the LP over all `2^d` columns of `C_d`.
pub fn check_bcm_full(b: &ValidatedMatrix) -> Result<MembershipVerdict, ExactError> {
    require_bcm(b)?;
    let d = b.d();
    if d > FULL_ENUMERATION_CAP {
        return Err(ExactError::DimensionTooLarge {
            d,
            cap: FULL_ENUMERATION_CAP,
        });
    }
    let p = b.matrix().moments();
    Ok(match feasibility_over(d, vertices_in_order(d)?, &p)? {
        Ok(cert) => MembershipVerdict::member(MethodTag::Full, cert),
        Err(ray) => MembershipVerdict::non_member(MethodTag::Full, ray),
    })
}

/// Membership method selector for [`check_tdm`] and [`check_membership`].
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Full,
    Symmetric,
    Colgen(ColgenConfig),
}

/// Decides membership of a validated matrix in `B_d` (BCM mode) or `T_d`
/// (TDM mode, via `T/d`).
pub fn check_membership(m: &ValidatedMatrix, method: &Method) -> Result<MembershipVerdict, ExactError> {
    let b = as_bcm(m);
    match method {
        Method::Full => check_bcm_full(&b),
        Method::Symmetric => Ok(symmetry::check_bcm_symmetric(&b, None)?),
        Method::Colgen(cfg) => {
            let out = colgen::check_membership_colgen(&b, cfg)?;
            Ok(out.verdict)
        }
    }
}

/// Decides `T ∈ T_d` through `T/d ∈ B_d`.
pub fn check_tdm(t: &ValidatedMatrix, method: &Method) -> Result<MembershipVerdict, ExactError> {
    if t.mode() != Mode::Tdm {
        return Err(MatrixError::WrongMode {
            expected: Mode::Tdm,
            actual: t.mode(),
        }
        .into());
    }
    check_membership(t, method)
}

/// Result of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub residual: f64,
    pub reasons: Vec<String>,
}

/// Checks weights, the max-norm residual `‖B − Σ w_i v_i v_i^T‖_max ≤ τ` and,
/// when `check_support` is set, the support bound `d(d+1)/2 + 1`.
pub fn verify_certificate(b: &CandidateMatrix, cert: &Certificate, check_support: bool) -> CertificateCheck {
    let tau = tolerance();
    let d = b.d();
    let mut reasons = Vec::new();
    if cert.vertices.len() != cert.weights.len() {
        reasons.push("vertex and weight counts differ".to_owned());
    }
    if let Some(v) = cert.vertices.iter().find(|v| v.d() != d) {
        reasons.push(format!("vertex {v} has dimension {}, expected {d}", v.d()));
        return CertificateCheck {
            valid: false,
            residual: f64::INFINITY,
            reasons,
        };
    }
    if let Some(w) = cert.weights.iter().find(|w| !w.is_finite() || **w < -tau) {
        reasons.push(format!("weight {w} is negative or not finite"));
    }
    let sum: f64 = cert.weights.iter().sum();
    if (sum - 1.0).abs() > tau {
        reasons.push(format!("weights sum to {sum}, expected 1"));
    }
    if check_support && cert.len() > moment_len(d) {
        reasons.push(format!("support {} exceeds {}", cert.len(), moment_len(d)));
    }
    let residual = cert.matrix(d).max_abs_diff(b);
    if !(residual <= tau) {
        reasons.push(format!("max-norm residual {residual:e} exceeds tolerance"));
    }
    CertificateCheck {
        valid: reasons.is_empty(),
        residual,
        reasons,
    }
}

/// Reduces a certificate to a basic one with support at most `d(d+1)/2 + 1`
/// representing the same moment vector.
pub fn caratheodory_reduce(d: usize, cert: &Certificate) -> Result<Certificate, LpError> {
    // Merge duplicates so the LP columns are distinct.
    let mut merged: std::collections::BTreeMap<BinaryVertex, f64> = Default::default();
    for (v, &w) in cert.vertices.iter().zip(&cert.weights) {
        *merged.entry(*v).or_insert(0.0) += w;
    }
    if merged.len() <= moment_len(d) {
        let (vertices, weights) = merged.into_iter().filter(|(_, w)| *w > 0.0).unzip();
        return Ok(Certificate { vertices, weights });
    }
    let p = cert.moments(d);
    let vertices: Vec<BinaryVertex> = merged.into_keys().collect();
    match feasibility_over(d, vertices, &p)? {
        Ok(c) => Ok(c),
        Err(_) => Err(LpError::NumericalBreakdown(
            "certificate support is infeasible for its own moments".into(),
        )),
    }
}

/// Checks the Farkas conditions `y^T a_v ≥ −τ` for every vertex and
/// `p^T y < −τ`. Enumerates `2^d` columns.
pub fn verify_farkas(b: &CandidateMatrix, y: &[f64]) -> bool {
    let tau = tolerance();
    let d = b.d();
    if y.len() != moment_len(d) || d > FULL_ENUMERATION_CAP + 2 {
        return false;
    }
    let p = b.moments();
    let py: f64 = p.iter().zip(y).map(|(a, b)| a * b).sum();
    if !(py < -tau) {
        return false;
    }
    let vs: Vec<BinaryVertex> = (0..1u64 << d).map(|m| BinaryVertex::from_mask(d, m)).collect();
    let mut out = vec![0.0; vs.len()];
    vertex_dots(d, &vs, y, &mut out);
    out.iter().all(|&x| x >= -tau)
}
