//! Dense linear programming: a revised simplex core and a general front end
//! handling inequality rows, bounds and sign normalization.

use serde::Serialize;
use thiserror::Error;

mod simplex;

pub use simplex::{ColumnSource, DenseColumns, RevisedSimplex, SimplexConfig, SimplexStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min c^T x` subject to `a_i^T x (sense_i) b_i`, `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    /// Empty means all zero.
    pub lower: Vec<f64>,
    /// Empty means no upper bounds.
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn with_row(mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let bad = |s: String| Err(LpError::InvalidProblem(s));
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return bad("rhs and senses must have one entry per row".into());
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return bad(format!("row {i} has {} coefficients, expected {n}", self.rows[i].len()));
        }
        if !self.lower.is_empty() && self.lower.len() != n {
            return bad("lower bounds must have one entry per variable".into());
        }
        if !self.upper.is_empty() && self.upper.len() != n {
            return bad("upper bounds must have one entry per variable".into());
        }
        let finite = self
            .objective
            .iter()
            .chain(self.rows.iter().flatten())
            .chain(&self.rhs)
            .chain(&self.lower)
            .chain(self.upper.iter().flatten())
            .all(|x| x.is_finite());
        if !finite {
            return bad("all coefficients, right-hand sides and bounds must be finite".into());
        }
        Ok(())
    }

    fn lower(&self, j: usize) -> f64 {
        self.lower.get(j).copied().unwrap_or(0.0)
    }

    fn upper(&self, j: usize) -> Option<f64> {
        self.upper.get(j).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per constraint row.
    pub dual: Vec<f64>,
    /// Multipliers of the upper-bound rows, one per bounded variable in order.
    pub bound_dual: Vec<f64>,
    /// `b^T y` including bound rows and the lower-bound shift.
    pub dual_objective: f64,
    /// Basic columns of the internal standard form; feed back to
    /// [`solve_with_basis`] for a warm start on a same-shaped problem.
    pub basis: Vec<usize>,
    /// On infeasibility: a ray over the constraint rows followed by the bound
    /// rows, normalized to `max |r_i| = 1`.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Standard form `A' z = b', z ≥ 0` of an [`LpProblem`].
struct StandardForm {
    cols: DenseColumns,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// `-1` where the row was negated to make its rhs nonnegative.
    sign: Vec<f64>,
    n: usize,
    constant: f64,
    bounded: Vec<usize>,
}

fn standardize(p: &LpProblem) -> StandardForm {
    let n = p.num_vars();
    let bounded: Vec<usize> = (0..n).filter(|&j| p.upper(j).is_some()).collect();
    let m = p.rows.len() + bounded.len();

    // Rows over shifted variables x' = x - l.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut slack_coef: Vec<f64> = Vec::with_capacity(m);
    for (i, r) in p.rows.iter().enumerate() {
        let shift: f64 = r.iter().enumerate().map(|(j, a)| a * p.lower(j)).sum();
        rows.push(r.clone());
        rhs.push(p.rhs[i] - shift);
        slack_coef.push(match p.senses[i] {
            Sense::Eq => 0.0,
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        });
    }
    for &j in &bounded {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows.push(r);
        rhs.push(p.upper(j).expect("bounded") - p.lower(j));
        slack_coef.push(1.0);
    }
    let sign: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();

    let mut cols = DenseColumns::new(m);
    for j in 0..n {
        cols.push((0..m).map(|i| sign[i] * rows[i][j]).collect());
    }
    let mut cost = p.objective.clone();
    for i in 0..m {
        if slack_coef[i] != 0.0 {
            let mut c = vec![0.0; m];
            c[i] = sign[i] * slack_coef[i];
            cols.push(c);
            cost.push(0.0);
        }
    }
    let constant = (0..n).map(|j| p.objective[j] * p.lower(j)).sum();
    StandardForm {
        cols,
        cost,
        rhs: rhs.iter().zip(&sign).map(|(b, s)| b * s).collect(),
        sign,
        n,
        constant,
        bounded,
    }
}

pub fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_with_basis(p, None)
}

/// Solves `p`, starting from `basis` when it is a primal feasible basis of
/// the standard form (otherwise from scratch).
pub fn solve_with_basis(p: &LpProblem, basis: Option<&[usize]>) -> Result<LpSolution, LpError> {
    p.check()?;
    let sf = standardize(p);
    let m = sf.rhs.len();
    let rows = p.rows.len();
    let mut s = RevisedSimplex::new(sf.cols, sf.cost, sf.rhs.clone(), SimplexConfig::default())?;
    if let Some(b) = basis {
        s.set_basis(b);
    }
    let status = s.solve()?;
    let unsign = |v: &[f64]| -> Vec<f64> { v.iter().zip(&sf.sign).map(|(a, s)| a * s).collect() };
    match status {
        SimplexStatus::Infeasible => {
            let ray = unsign(s.farkas().expect("infeasible run stores a ray"));
            Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                primal: Vec::new(),
                dual: Vec::new(),
                bound_dual: Vec::new(),
                dual_objective: f64::NAN,
                basis: s.basis(),
                farkas: Some(ray),
                iterations: s.iterations(),
            })
        }
        SimplexStatus::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            primal: Vec::new(),
            dual: Vec::new(),
            bound_dual: Vec::new(),
            dual_objective: f64::NAN,
            basis: s.basis(),
            farkas: None,
            iterations: s.iterations(),
        }),
        SimplexStatus::Optimal => {
            let z = s.primal();
            let primal: Vec<f64> = (0..sf.n).map(|j| z[j] + p.lower(j)).collect();
            let y_std = s.duals();
            let dual_objective = y_std.iter().zip(&sf.rhs).map(|(y, b)| y * b).sum::<f64>() + sf.constant;
            let y = unsign(&y_std);
            debug_assert_eq!(y.len(), m);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: s.objective() + sf.constant,
                primal,
                dual: y[..rows].to_vec(),
                bound_dual: y[rows..rows + sf.bounded.len()].to_vec(),
                dual_objective,
                basis: s.basis(),
                farkas: None,
                iterations: s.iterations(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible(Vec<f64>),
}

/// Decides `{x ≥ 0 : a_i^T x (sense_i) b_i}` by Phase I alone.
pub fn solve_feasibility(rows: &[Vec<f64>], senses: &[Sense], rhs: &[f64]) -> Result<Feasibility, LpError> {
    let n = rows.first().map_or(0, Vec::len);
    let p = LpProblem {
        objective: vec![0.0; n],
        rows: rows.to_vec(),
        senses: senses.to_vec(),
        rhs: rhs.to_vec(),
        ..LpProblem::default()
    };
    p.check()?;
    let sf = standardize(&p);
    let mut s = RevisedSimplex::new(sf.cols, sf.cost, sf.rhs, SimplexConfig::default())?;
    if s.find_feasible()? {
        Ok(Feasibility::Feasible(s.primal()[..n].to_vec()))
    } else {
        let ray = s.farkas().expect("ray stored").iter().zip(&sf.sign).map(|(a, s)| a * s).collect();
        Ok(Feasibility::Infeasible(ray))
    }
}
