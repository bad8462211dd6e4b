//! Domain types: candidate matrices, validation, binary vertices, the moment
//! vector `p_d` and the coefficient map `C_d`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::tolerance;

pub mod io;

/// Largest dimension for which `C_d` is materialized.
pub const MAX_MATERIALIZED_DIM: usize = 22;

/// Largest supported dimension overall (vertices are stored as `u64` masks).
pub const MAX_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix must have dimension at least 1")]
    Empty,
    #[error("row {row} has {len} entries, expected {d}")]
    NotSquare { row: usize, len: usize, d: usize },
    #[error("dimension {d} exceeds the supported maximum {max}")]
    DimensionTooLarge { d: usize, max: usize },
    #[error("expected a {expected:?}-mode matrix, got {actual:?}")]
    WrongMode { expected: Mode, actual: Mode },
    #[error("buffer of length {len} cannot hold a {d}x{d} matrix")]
    BadLength { len: usize, d: usize },
    #[error("vertex bit pattern {bits:#x} does not fit in dimension {d}")]
    BitsOutOfRange { bits: u64, d: usize },
    #[error("invalid bit string {0:?}")]
    BadBitString(String),
}

/// Whether a matrix is read as a tail dependence matrix or a Bernoulli
/// compatible matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tdm,
    Bcm,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Tdm => "tdm",
            Mode::Bcm => "bcm",
        })
    }
}

/// Number of rows of `C_d`, i.e. the length of `p_d`.
pub fn moment_len(d: usize) -> usize {
    d * (d + 1) / 2 + 1
}

/// Row of `C_d` (and index into `p_d`) holding the pair moment `b_{ij}`, for
/// 0-based `i < j`.
pub fn pair_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    1 + d + i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Iterates over the pairs `(i, j)`, `i < j`, in moment-vector order.
pub fn pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| (i + 1..d).map(move |j| (i, j)))
}

/// A point of `{0,1}^d`. Bit `k` of `bits` is coordinate `i_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryVertex {
    d: u8,
    bits: u64,
}

impl BinaryVertex {
    pub fn new(d: usize, bits: u64) -> Result<Self, MatrixError> {
        if d == 0 || d > MAX_DIM {
            return Err(MatrixError::DimensionTooLarge { d, max: MAX_DIM });
        }
        if d < 64 && bits >> d != 0 {
            return Err(MatrixError::BitsOutOfRange { bits, d });
        }
        Ok(Self { d: d as u8, bits })
    }

    /// Panics on invalid input; for internal callers that already checked.
    pub(crate) fn from_mask(d: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&d) && (d == 64 || bits >> d == 0));
        Self { d: d as u8, bits }
    }

    pub fn zero(d: usize) -> Self {
        Self::from_mask(d, 0)
    }

    pub fn ones(d: usize) -> Self {
        Self::from_mask(d, full_mask(d))
    }

    pub fn from_indices(d: usize, idx: &[usize]) -> Self {
        let bits = idx.iter().fold(0u64, |acc, &i| acc | (1 << i));
        Self::from_mask(d, bits)
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Column of `C_d` for this vertex: `(1, v_1..v_d, v_1v_2, v_1v_3, ..., v_{d-1}v_d)`.
    pub fn column(&self) -> Vec<u8> {
        let d = self.d();
        let mut col = vec![0u8; moment_len(d)];
        col[0] = 1;
        for i in 0..d {
            col[1 + i] = self.get(i) as u8;
        }
        for (i, j) in pairs(d) {
            col[pair_index(d, i, j)] = (self.get(i) && self.get(j)) as u8;
        }
        col
    }

    /// Bits as a string `i_1 i_2 ... i_d`.
    pub fn to_bit_string(&self) -> String {
        (0..self.d()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn parse_bit_string(s: &str) -> Result<Self, MatrixError> {
        let d = s.len();
        if d == 0 || d > MAX_DIM {
            return Err(MatrixError::BadBitString(s.to_owned()));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(MatrixError::BadBitString(s.to_owned())),
            }
        }
        Ok(Self::from_mask(d, bits))
    }

    /// Sort key realizing `≺_d`: popcount ascending, then the tuple
    /// `(i_1, ..., i_d)` in descending lexicographic order.
    fn order_key(&self) -> (u32, std::cmp::Reverse<u64>) {
        let rev = self.bits.reverse_bits() >> (64 - self.d as u32);
        (self.popcount(), std::cmp::Reverse(rev))
    }
}

pub(crate) fn full_mask(d: usize) -> u64 {
    if d >= 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

impl Ord for BinaryVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d
            .cmp(&other.d)
            .then_with(|| self.order_key().cmp(&other.order_key()))
    }
}

impl PartialOrd for BinaryVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinaryVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl Serialize for BinaryVertex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for BinaryVertex {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        BinaryVertex::parse_bit_string(&s).map_err(serde::de::Error::custom)
    }
}

/// All `2^d` vertices sorted by `≺_d`.
pub fn vertices_in_order(d: usize) -> Result<Vec<BinaryVertex>, MatrixError> {
    if d == 0 || d > MAX_MATERIALIZED_DIM {
        return Err(MatrixError::DimensionTooLarge {
            d,
            max: MAX_MATERIALIZED_DIM,
        });
    }
    let mut v: Vec<BinaryVertex> = (0..1u64 << d).map(|b| BinaryVertex::from_mask(d, b)).collect();
    v.sort_unstable();
    Ok(v)
}

/// A dense symmetric matrix whose membership is to be decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl CandidateMatrix {
    /// Builds from rows; checks only shape.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let d = rows.len();
        if d == 0 {
            return Err(MatrixError::Empty);
        }
        if d > MAX_DIM {
            return Err(MatrixError::DimensionTooLarge { d, max: MAX_DIM });
        }
        let mut entries = Vec::with_capacity(d * d);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != d {
                return Err(MatrixError::NotSquare { row, len: r.len(), d });
            }
            entries.extend(r);
        }
        Ok(Self { d, entries })
    }

    /// Builds from a row-major buffer of length `d*d`.
    pub fn from_row_major(d: usize, entries: Vec<f64>) -> Result<Self, MatrixError> {
        if d == 0 {
            return Err(MatrixError::Empty);
        }
        if d > MAX_DIM {
            return Err(MatrixError::DimensionTooLarge { d, max: MAX_DIM });
        }
        if entries.len() != d * d {
            return Err(MatrixError::BadLength { len: entries.len(), d });
        }
        Ok(Self { d, entries })
    }

    /// `entry(i, j) = f(i, j)`.
    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, MatrixError> {
        let entries = (0..d * d).map(|k| f(k / d, k % d)).collect();
        Self::from_row_major(d, entries)
    }

    /// The rank-one matrix `vv^T`.
    pub fn outer(v: BinaryVertex) -> Self {
        Self::from_fn(v.d(), |i, j| (v.get(i) && v.get(j)) as u8 as f64).expect("valid dimension")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d: self.d,
            entries: self.entries.iter().map(|x| x * s).collect(),
        }
    }

    /// Moment vector `(1, diagonal, upper triangle row by row)`, no validation.
    pub fn moments(&self) -> Vec<f64> {
        let d = self.d;
        let mut p = Vec::with_capacity(moment_len(d));
        p.push(1.0);
        p.extend((0..d).map(|i| self.get(i, i)));
        p.extend(pairs(d).map(|(i, j)| self.get(i, j)));
        p
    }

    /// Max-norm distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.d, other.d, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks the constraints of `mode`, collecting every violation.
    pub fn validate(self, mode: Mode) -> Result<ValidatedMatrix, ValidationError> {
        let tau = tolerance();
        let d = self.d;
        let mut violations = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let x = self.get(i, j);
                if !x.is_finite() {
                    violations.push(Violation::NonFinite { i, j });
                    continue;
                }
                if j > i && x != self.get(j, i) {
                    violations.push(Violation::NonSymmetric { i, j });
                }
                if !(-tau..=1.0 + tau).contains(&x) {
                    violations.push(Violation::EntryOutOfRange { i, j, value: x });
                }
            }
        }
        match mode {
            Mode::Tdm => {
                for i in 0..d {
                    let x = self.get(i, i);
                    if x.is_finite() && x != 1.0 {
                        violations.push(Violation::DiagonalNotOne { i, value: x });
                    }
                }
            }
            Mode::Bcm => {
                for (i, j) in pairs(d) {
                    let x = self.get(i, j);
                    let cap = self.get(i, i).min(self.get(j, j));
                    if x.is_finite() && cap.is_finite() && x > cap + tau {
                        violations.push(Violation::PairExceedsMarginal { i, j, value: x, cap });
                    }
                }
            }
        }
        if violations.is_empty() {
            Ok(ValidatedMatrix { matrix: self, mode })
        } else {
            Err(ValidationError { violations })
        }
    }
}

/// A single violated constraint found by [`CandidateMatrix::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    NonFinite { i: usize, j: usize },
    NonSymmetric { i: usize, j: usize },
    DiagonalNotOne { i: usize, value: f64 },
    EntryOutOfRange { i: usize, j: usize, value: f64 },
    PairExceedsMarginal { i: usize, j: usize, value: f64, cap: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonFinite { i, j } => write!(f, "entry ({i},{j}) is not finite"),
            Violation::NonSymmetric { i, j } => {
                write!(f, "entries ({i},{j}) and ({j},{i}) differ")
            }
            Violation::DiagonalNotOne { i, value } => {
                write!(f, "diagonal entry ({i},{i}) is {value}, expected 1")
            }
            Violation::EntryOutOfRange { i, j, value } => {
                write!(f, "entry ({i},{j}) = {value} is outside [0,1]")
            }
            Violation::PairExceedsMarginal { i, j, value, cap } => {
                write!(f, "entry ({i},{j}) = {value} exceeds min diagonal {cap}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("matrix failed validation: {}", self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

/// A matrix that passed validation in a given mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedMatrix {
    matrix: CandidateMatrix,
    mode: Mode,
}

impl ValidatedMatrix {
    pub fn matrix(&self) -> &CandidateMatrix {
        &self.matrix
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn d(&self) -> usize {
        self.matrix.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn into_inner(self) -> CandidateMatrix {
        self.matrix
    }
}

/// Maps a TDM `T` to the BCM `T/d`; `T ∈ T_d` iff `T/d ∈ B_d`.
pub fn tdm_to_bcm(t: &ValidatedMatrix) -> Result<ValidatedMatrix, MatrixError> {
    if t.mode != Mode::Tdm {
        return Err(MatrixError::WrongMode {
            expected: Mode::Tdm,
            actual: t.mode,
        });
    }
    let d = t.d() as f64;
    let entries = t.matrix.entries.iter().map(|x| x / d).collect();
    // Division preserves symmetry, range and the marginal caps exactly.
    Ok(ValidatedMatrix {
        matrix: CandidateMatrix {
            d: t.d(),
            entries,
        },
        mode: Mode::Bcm,
    })
}

/// Returns the matrix to test for `B_d` membership: itself in BCM mode, `T/d`
/// in TDM mode.
pub fn as_bcm(m: &ValidatedMatrix) -> ValidatedMatrix {
    match m.mode {
        Mode::Bcm => m.clone(),
        Mode::Tdm => tdm_to_bcm(m).expect("mode checked"),
    }
}

/// `p_d = (1, b_11, ..., b_dd, b_12, b_13, ..., b_{d-1,d})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    d: usize,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub fn moment_vector(m: &ValidatedMatrix) -> MomentVector {
    MomentVector {
        d: m.d(),
        values: m.matrix.moments(),
    }
}

/// Nonnegative masses on vertices of `{0,1}^d`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomVector {
    d: usize,
    weights: BTreeMap<BinaryVertex, f64>,
}

impl AtomVector {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            weights: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Adds `w` to the mass of `v`.
    pub fn add(&mut self, v: BinaryVertex, w: f64) {
        assert_eq!(v.d(), self.d, "vertex dimension mismatch");
        *self.weights.entry(v).or_insert(0.0) += w;
    }

    pub fn weight(&self, v: BinaryVertex) -> f64 {
        self.weights.get(&v).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BinaryVertex, f64)> + '_ {
        self.weights.iter().map(|(v, w)| (*v, *w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// `C_d q`.
    pub fn apply_coefficients(&self) -> Vec<f64> {
        let mut out = vec![0.0; moment_len(self.d)];
        for (v, w) in self.iter() {
            for (o, c) in out.iter_mut().zip(v.column()) {
                if c == 1 {
                    *o += w;
                }
            }
        }
        out
    }

    /// `Σ_v q_v vv^T`.
    pub fn to_matrix(&self) -> CandidateMatrix {
        let d = self.d;
        let mut e = vec![0.0; d * d];
        for (v, w) in self.iter() {
            for i in (0..d).filter(|&i| v.get(i)) {
                for j in (0..d).filter(|&j| v.get(j)) {
                    e[i * d + j] += w;
                }
            }
        }
        CandidateMatrix::from_row_major(d, e).expect("valid dimension")
    }

    /// Drops entries whose magnitude is at most `eps`.
    pub fn pruned(mut self, eps: f64) -> Self {
        self.weights.retain(|_, w| w.abs() > eps);
        self
    }
}

/// `C_d`, stored implicitly through its column labels.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    d: usize,
    vertices: Vec<BinaryVertex>,
}

pub fn build_coefficient_matrix(d: usize) -> Result<CoefficientMatrix, MatrixError> {
    Ok(CoefficientMatrix {
        d,
        vertices: vertices_in_order(d)?,
    })
}

impl CoefficientMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_rows(&self) -> usize {
        moment_len(self.d)
    }

    pub fn num_cols(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, col: usize) -> BinaryVertex {
        self.vertices[col]
    }

    pub fn vertices(&self) -> &[BinaryVertex] {
        &self.vertices
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        self.vertices[col].column()[row]
    }

    /// Row-major dense copy. Allocates `rows × 2^d` bytes.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let cols: Vec<Vec<u8>> = self.vertices.iter().map(|v| v.column()).collect();
        (0..self.num_rows())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(s: &str) -> BinaryVertex {
        BinaryVertex::parse_bit_string(s).unwrap()
    }

    #[test]
    fn vertex_columns_match_printed_c3() {
        assert_eq!(v("000").column(), vec![1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(v("111").column(), vec![1; 7]);
        assert_eq!(v("110").column(), vec![1, 1, 1, 0, 1, 0, 0]);
    }

    #[test]
    fn c3_matches_printed_matrix() {
        let printed = [
            "11111111", "01001101", "00101011", "00010111", "00001001", "00000101", "00000011",
        ];
        let c = build_coefficient_matrix(3).unwrap().to_dense();
        let rows: Vec<String> = c
            .iter()
            .map(|r| r.iter().map(|x| char::from(b'0' + x)).collect())
            .collect();
        assert_eq!(rows, printed);
    }

    #[test]
    fn order_for_d3() {
        let got: Vec<String> = vertices_in_order(3).unwrap().iter().map(|v| v.to_string()).collect();
        assert_eq!(got, ["000", "100", "010", "001", "110", "101", "011", "111"]);
    }

    #[test]
    fn c1_shape() {
        assert_eq!(build_coefficient_matrix(1).unwrap().to_dense(), vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn coefficient_matrix_shape_and_first_row() {
        for d in 1..=8 {
            let c = build_coefficient_matrix(d).unwrap();
            assert_eq!(c.num_cols(), 1 << d);
            assert_eq!(c.num_rows(), d * (d + 1) / 2 + 1);
            let dense = c.to_dense();
            assert!(dense[0].iter().all(|&x| x == 1));
            assert!((1..c.num_rows()).all(|r| dense[r][0] == 0));
        }
        assert!(matches!(
            build_coefficient_matrix(23),
            Err(MatrixError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn column_equals_moments_of_outer_product_exhaustively() {
        for d in 1..=8 {
            for b in 0..1u64 << d {
                let vx = BinaryVertex::from_mask(d, b);
                let p: Vec<u8> = CandidateMatrix::outer(vx).moments().iter().map(|&x| x as u8).collect();
                assert_eq!(p, vx.column());
            }
        }
    }

    #[test]
    fn validation_examples() {
        let id = CandidateMatrix::from_fn(3, |i, j| (i == j) as u8 as f64).unwrap();
        assert!(id.validate(Mode::Tdm).is_ok());
        let j = CandidateMatrix::from_fn(3, |_, _| 1.0).unwrap();
        assert!(j.validate(Mode::Tdm).is_ok());
        let bad = CandidateMatrix::from_rows(vec![vec![1.0, 1.2], vec![1.2, 1.0]]).unwrap();
        let err = bad.validate(Mode::Tdm).unwrap_err();
        assert!(err
            .violations
            .iter()
            .all(|v| matches!(v, Violation::EntryOutOfRange { .. })));
        assert_eq!(err.violations.len(), 2);
    }

    #[test]
    fn validation_catches_each_kind() {
        let asym = CandidateMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(
            asym.validate(Mode::Tdm).unwrap_err().violations[0],
            Violation::NonSymmetric { i: 0, j: 1 }
        ));
        let diag = CandidateMatrix::from_rows(vec![vec![0.5, 0.1], vec![0.1, 1.0]]).unwrap();
        assert!(matches!(
            diag.validate(Mode::Tdm).unwrap_err().violations[0],
            Violation::DiagonalNotOne { i: 0, .. }
        ));
        let pair = CandidateMatrix::from_rows(vec![vec![0.2, 0.3], vec![0.3, 0.9]]).unwrap();
        assert!(matches!(
            pair.validate(Mode::Bcm).unwrap_err().violations[0],
            Violation::PairExceedsMarginal { .. }
        ));
        let nan = CandidateMatrix::from_rows(vec![vec![f64::NAN]]).unwrap();
        assert!(nan.validate(Mode::Bcm).is_err());
        assert!(matches!(
            CandidateMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0]]),
            Err(MatrixError::NotSquare { row: 1, .. })
        ));
    }

    #[test]
    fn moment_vector_examples() {
        let m = CandidateMatrix::from_rows(vec![vec![0.3, 0.1], vec![0.1, 0.6]])
            .unwrap()
            .validate(Mode::Bcm)
            .unwrap();
        assert_eq!(moment_vector(&m).values(), &[1.0, 0.3, 0.6, 0.1]);
        let third = CandidateMatrix::from_fn(3, |_, _| 1.0 / 3.0).unwrap().validate(Mode::Bcm).unwrap();
        assert_eq!(moment_vector(&third).values(), &[1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let vv = CandidateMatrix::outer(v("101")).validate(Mode::Bcm).unwrap();
        // Hand expansion of vv^T for v = (1,0,1): diag (1,0,1), pairs (b12,b13,b23) = (0,1,0).
        assert_eq!(moment_vector(&vv).values(), &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn scaling_bridge_examples() {
        let t = CandidateMatrix::from_rows(vec![vec![1.0, 0.4], vec![0.4, 1.0]]).unwrap().validate(Mode::Tdm).unwrap();
        let b = tdm_to_bcm(&t).unwrap();
        assert_eq!(b.mode(), Mode::Bcm);
        assert_eq!(b.matrix().entries(), &[0.5, 0.2, 0.2, 0.5]);
        let id = CandidateMatrix::from_fn(3, |i, j| (i == j) as u8 as f64).unwrap().validate(Mode::Tdm).unwrap();
        assert_eq!(tdm_to_bcm(&id).unwrap().matrix().entries(), CandidateMatrix::from_fn(3, |i, j| if i == j { 1.0 / 3.0 } else { 0.0 }).unwrap().entries());
        let t = CandidateMatrix::from_rows(vec![
            vec![1.0, 2.0 / 3.0, 0.0],
            vec![2.0 / 3.0, 1.0, 2.0 / 3.0],
            vec![0.0, 2.0 / 3.0, 1.0],
        ])
        .unwrap()
        .validate(Mode::Tdm)
        .unwrap();
        let b = tdm_to_bcm(&t).unwrap();
        let expected = [[3.0, 2.0, 0.0], [2.0, 3.0, 2.0], [0.0, 2.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((b.get(i, j) - expected[i][j] / 3.0 / 3.0).abs() < 1e-15);
            }
        }
        assert!(tdm_to_bcm(&b).is_err());
    }

    #[test]
    fn pair_index_layout() {
        let d = 4;
        let idx: Vec<usize> = pairs(d).map(|(i, j)| pair_index(d, i, j)).collect();
        assert_eq!(idx, (5..11).collect::<Vec<_>>());
    }

    #[test]
    fn bit_string_round_trip() {
        let x = v("0110");
        assert_eq!(x.bits(), 0b0110);
        assert_eq!(BinaryVertex::parse_bit_string(&x.to_string()).unwrap(), x);
        assert!(BinaryVertex::parse_bit_string("01a").is_err());
        assert!(BinaryVertex::new(3, 8).is_err());
    }

    proptest! {
        #[test]
        fn order_is_total_and_consistent(d in 1usize..12, a in any::<u64>(), b in any::<u64>()) {
            let m = full_mask(d);
            let (x, y) = (BinaryVertex::from_mask(d, a & m), BinaryVertex::from_mask(d, b & m));
            prop_assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
            prop_assert_eq!(x.cmp(&y) == Ordering::Equal, x == y);
            if x.popcount() < y.popcount() {
                prop_assert!(x < y);
            }
        }

        #[test]
        fn atom_vector_maps_to_its_matrix(d in 1usize..7, raw in proptest::collection::vec((any::<u64>(), 0.0f64..1.0), 1..10)) {
            let mut q = AtomVector::new(d);
            for (b, w) in raw {
                q.add(BinaryVertex::from_mask(d, b & full_mask(d)), w);
            }
            let via_c = q.apply_coefficients();
            let via_m = q.to_matrix().moments();
            prop_assert!((via_c[0] - q.total()).abs() < 1e-12);
            for k in 1..via_c.len() {
                prop_assert!((via_c[k] - via_m[k]).abs() < 1e-12);
            }
        }
    }
}
