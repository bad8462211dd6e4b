//! Primal revised simplex over an abstract column source, with an explicit
//! basis inverse updated by elementary row operations and refactored
//! periodically.

use super::LpError;

/// Index offset marking artificial variables in the basis.
const ART: usize = 1 << 40;

/// Supplies the columns of the constraint matrix `A` of `Ax = b, x ≥ 0`.
pub trait ColumnSource {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;

    /// Writes column `j` into `out` (length `num_rows`).
    fn fill_column(&self, j: usize, out: &mut [f64]);

    /// `a_j^T y`.
    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut col = vec![0.0; self.num_rows()];
        self.fill_column(j, &mut col);
        col.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `out[j] = a_j^T y` for every column.
    fn dots(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.dot(j, y);
        }
    }
}

/// Explicit dense columns.
#[derive(Debug, Clone, Default)]
pub struct DenseColumns {
    rows: usize,
    cols: Vec<Vec<f64>>,
}

impl DenseColumns {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            cols: Vec::new(),
        }
    }

    pub fn push(&mut self, col: Vec<f64>) {
        assert_eq!(col.len(), self.rows, "column length mismatch");
        self.cols.push(col);
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }
}

impl ColumnSource for DenseColumns {
    fn num_rows(&self) -> usize {
        self.rows
    }

    fn num_cols(&self) -> usize {
        self.cols.len()
    }

    fn fill_column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.cols[j]);
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        self.cols[j].iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    /// Primal feasibility tolerance; also the Phase-I infeasibility threshold.
    pub feas_tol: f64,
    /// Reduced-cost tolerance.
    pub opt_tol: f64,
    /// Smallest pivot accepted in the ratio test.
    pub ratio_tol: f64,
    /// Smallest pivot accepted when refactoring the basis.
    pub pivot_tol: f64,
    /// Iterations between basis refactorizations; the effective interval is
    /// at least the row count, which keeps the amortized refactor cost at
    /// O(m²) per iteration.
    pub refactor_every: usize,
    /// Iteration cap; `None` picks a limit from the problem size.
    pub max_iter: Option<usize>,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            feas_tol: crate::tolerance(),
            opt_tol: 1e-11,
            ratio_tol: 1e-9,
            pivot_tol: 1e-12,
            refactor_every: 64,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Solver state for `min c^T x, Ax = b, x ≥ 0` with `b ≥ 0`.
#[derive(Debug, Clone)]
pub struct RevisedSimplex<S> {
    src: S,
    cost: Vec<f64>,
    b: Vec<f64>,
    m: usize,
    cfg: SimplexConfig,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    feasible: bool,
    farkas: Option<Vec<f64>>,
    phase_one_value: f64,
    iterations: usize,
    since_refactor: usize,
    // scratch
    y: Vec<f64>,
    dj: Vec<f64>,
    col: Vec<f64>,
    alpha: Vec<f64>,
}

impl<S: ColumnSource> RevisedSimplex<S> {
    pub fn new(src: S, cost: Vec<f64>, b: Vec<f64>, cfg: SimplexConfig) -> Result<Self, LpError> {
        let m = src.num_rows();
        let n = src.num_cols();
        if b.len() != m {
            return Err(LpError::InvalidProblem(format!("rhs has length {}, expected {m}", b.len())));
        }
        if cost.len() != n {
            return Err(LpError::InvalidProblem(format!("cost has length {}, expected {n}", cost.len())));
        }
        if let Some(x) = b.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(LpError::InvalidProblem(format!("rhs entry {x} must be finite and nonnegative")));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(LpError::InvalidProblem("non-finite cost".into()));
        }
        let mut s = Self {
            src,
            cost,
            b,
            m,
            cfg,
            basis: Vec::new(),
            in_basis: vec![false; n],
            binv: Vec::new(),
            xb: Vec::new(),
            feasible: false,
            farkas: None,
            phase_one_value: 0.0,
            iterations: 0,
            since_refactor: 0,
            y: vec![0.0; m],
            dj: vec![0.0; n],
            col: vec![0.0; m],
            alpha: vec![0.0; m],
        };
        s.reset_to_artificial();
        Ok(s)
    }

    fn reset_to_artificial(&mut self) {
        let m = self.m;
        self.basis = (0..m).map(|r| ART + r).collect();
        self.in_basis.iter_mut().for_each(|f| *f = false);
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = 1.0;
        }
        self.xb = self.b.clone();
        self.feasible = false;
        self.since_refactor = 0;
    }

    pub fn source(&self) -> &S {
        &self.src
    }

    /// Appends columns through `f`, then registers their costs. The current
    /// basis stays valid, so a following [`solve`](Self::solve) warm-starts.
    pub fn add_columns(&mut self, f: impl FnOnce(&mut S), costs: &[f64]) -> Result<(), LpError> {
        let before = self.src.num_cols();
        f(&mut self.src);
        let after = self.src.num_cols();
        if after - before != costs.len() {
            return Err(LpError::InvalidProblem("cost count does not match added columns".into()));
        }
        self.cost.extend_from_slice(costs);
        self.in_basis.resize(after, false);
        self.dj.resize(after, 0.0);
        Ok(())
    }

    /// Installs a starting basis of structural column indices. Returns `false`
    /// (and keeps the artificial start) when the basis is malformed, singular
    /// or primal infeasible.
    pub fn set_basis(&mut self, basis: &[usize]) -> bool {
        let n = self.src.num_cols();
        if basis.len() != self.m || basis.iter().any(|&j| j >= n) {
            return false;
        }
        let mut seen = vec![false; n];
        for &j in basis {
            if std::mem::replace(&mut seen[j], true) {
                return false;
            }
        }
        let saved = (self.basis.clone(), self.binv.clone(), self.xb.clone(), self.in_basis.clone());
        self.basis = basis.to_vec();
        self.in_basis = seen;
        let ok = self.refactor().is_ok() && self.xb.iter().all(|&x| x >= -self.cfg.feas_tol);
        if ok {
            self.feasible = true;
            for x in &mut self.xb {
                *x = x.max(0.0);
            }
        } else {
            (self.basis, self.binv, self.xb, self.in_basis) = saved;
        }
        ok
    }

    /// Runs Phase I if needed, then Phase II.
    pub fn solve(&mut self) -> Result<SimplexStatus, LpError> {
        if !self.find_feasible()? {
            return Ok(SimplexStatus::Infeasible);
        }
        self.iterate(Phase::Two)
    }

    /// Runs Phase I only. Returns whether `Ax = b, x ≥ 0` is feasible.
    pub fn find_feasible(&mut self) -> Result<bool, LpError> {
        if self.feasible {
            return Ok(true);
        }
        self.iterate(Phase::One)?;
        let value: f64 = self.artificial_mass();
        self.phase_one_value = value;
        if value > self.cfg.feas_tol {
            self.compute_duals(Phase::One);
            let scale = self.y.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let ray = self.y.iter().map(|v| if scale > 0.0 { -v / scale } else { 0.0 }).collect();
            self.farkas = Some(ray);
            return Ok(false);
        }
        self.feasible = true;
        Ok(true)
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= ART)
            .map(|(_, &x)| x.max(0.0))
            .sum()
    }

    /// Phase-I optimum (sum of artificials) from the last feasibility run.
    pub fn phase_one_value(&self) -> f64 {
        self.phase_one_value
    }

    /// Farkas ray `r` with `A^T r ≥ −tol`, `b^T r < 0`, `max |r_i| = 1`,
    /// available after an infeasible Phase I.
    pub fn farkas(&self) -> Option<&[f64]> {
        self.farkas.as_deref()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Structural basis columns (artificials omitted).
    pub fn basis(&self) -> Vec<usize> {
        self.basis.iter().copied().filter(|&j| j < ART).collect()
    }

    /// Primal values of the structural columns.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.src.num_cols()];
        for (&j, &v) in self.basis.iter().zip(&self.xb) {
            if j < ART {
                x[j] = v.max(0.0);
            }
        }
        x
    }

    /// Nonzero structural primal values as `(column, value)`.
    pub fn basic_values(&self) -> Vec<(usize, f64)> {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j < ART)
            .map(|(&j, &v)| (j, v.max(0.0)))
            .collect()
    }

    pub fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j < ART)
            .map(|(&j, &v)| self.cost[j] * v.max(0.0))
            .sum()
    }

    /// Phase-II simplex multipliers `y = c_B^T B^{-1}`.
    pub fn duals(&mut self) -> Vec<f64> {
        self.compute_duals(Phase::Two);
        self.y.clone()
    }

    fn cost_of(&self, j: usize, phase: Phase) -> f64 {
        match (phase, j >= ART) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.cost[j],
        }
    }

    fn compute_duals(&mut self, phase: Phase) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..m {
            let c = self.cost_of(self.basis[k], phase);
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, bi) in self.y.iter_mut().zip(row) {
                    *yi += c * bi;
                }
            }
        }
    }

    fn load_column(&mut self, j: usize) {
        if j >= ART {
            self.col.iter_mut().for_each(|v| *v = 0.0);
            self.col[j - ART] = 1.0;
        } else {
            self.src.fill_column(j, &mut self.col);
        }
    }

    fn max_iterations(&self) -> usize {
        self.cfg
            .max_iter
            .unwrap_or(50 * (self.m + self.src.num_cols()) + 10_000)
    }

    fn iterate(&mut self, phase: Phase) -> Result<SimplexStatus, LpError> {
        let m = self.m;
        let mut degenerate = 0usize;
        let mut bland = false;
        let limit = self.max_iterations();
        let mut stalled = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if self.since_refactor >= self.cfg.refactor_every.max(m) {
                self.refactor()?;
            }
            let n = self.src.num_cols();
            self.compute_duals(phase);
            self.dj.resize(n, 0.0);
            self.src.dots(&self.y, &mut self.dj);

            let mut enter = None;
            let mut best = -self.cfg.opt_tol;
            for j in 0..n {
                if self.in_basis[j] {
                    continue;
                }
                let rc = self.cost_of(j, phase) - self.dj[j];
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(q) = enter else {
                return Ok(SimplexStatus::Optimal);
            };

            self.load_column(q);
            let nz: Vec<(usize, f64)> = self.col.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                self.alpha[i] = nz.iter().map(|&(k, v)| row[k] * v).sum();
            }

            // Ratio test. In Phase II basic artificials are fixed at zero and
            // leave on any nonzero pivot.
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for i in 0..m {
                let a = self.alpha[i];
                let ratio = if phase == Phase::Two && self.basis[i] >= ART {
                    if a.abs() <= self.cfg.ratio_tol {
                        continue;
                    }
                    0.0
                } else {
                    if a <= self.cfg.ratio_tol {
                        continue;
                    }
                    self.xb[i].max(0.0) / a
                };
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < theta - 1e-12 {
                            true
                        } else if ratio <= theta + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a.abs() > self.alpha[l].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    theta = theta.min(ratio);
                }
            }
            let Some(r) = leave else {
                if phase == Phase::One {
                    return Err(LpError::NumericalBreakdown("unbounded Phase-I direction".into()));
                }
                return Ok(SimplexStatus::Unbounded);
            };
            let theta = if phase == Phase::Two && self.basis[r] >= ART {
                0.0
            } else {
                self.xb[r].max(0.0) / self.alpha[r]
            };

            self.pivot(r, q, theta);
            self.iterations += 1;

            if theta <= 1e-12 {
                degenerate += 1;
                stalled += 1;
                if degenerate > 5 * (m + n) {
                    bland = true;
                }
            } else {
                degenerate = 0;
                stalled = 0;
                bland = false;
            }
            if stalled > 50 * (m + n) + 1000 {
                return Err(LpError::NumericalBreakdown("simplex stalled on degenerate pivots".into()));
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, theta: f64) {
        let m = self.m;
        let piv = self.alpha[r];
        let nz: Vec<usize> = {
            let row = &mut self.binv[r * m..(r + 1) * m];
            for v in row.iter_mut() {
                *v /= piv;
            }
            (0..m).filter(|&k| row[k] != 0.0).collect()
        };
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, tail) = rest.split_at_mut(m);
        let rows = head.chunks_mut(m).enumerate().chain(tail.chunks_mut(m).enumerate().map(|(k, row)| (r + 1 + k, row)));
        for (i, row) in rows {
            let f = self.alpha[i];
            if f != 0.0 {
                for &k in &nz {
                    row[k] -= f * pivot_row[k];
                }
            }
        }
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * self.alpha[i];
            }
        }
        self.xb[r] = theta;
        let old = self.basis[r];
        if old < ART {
            self.in_basis[old] = false;
        }
        self.basis[r] = q;
        self.in_basis[q] = true;
        self.since_refactor += 1;
    }

    /// Recomputes `B^{-1}` by Gauss-Jordan elimination with partial pivoting
    /// and resets `x_B = B^{-1} b`.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for k in 0..m {
            self.load_column(self.basis[k]);
            for i in 0..m {
                a[i * m + k] = self.col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .expect("nonempty range");
            if a[p * m + c].abs() < self.cfg.pivot_tol {
                return Err(LpError::NumericalBreakdown(format!(
                    "singular basis (pivot {:e})",
                    a[p * m + c].abs()
                )));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            // Bases here are mostly unit columns, so pivot rows are sparse:
            // touch only their nonzeros.
            let d = a[c * m + c];
            let nz_a: Vec<usize> = (c + 1..m).filter(|&k| a[c * m + k] != 0.0).collect();
            let nz_inv: Vec<usize> = (0..m).filter(|&k| inv[c * m + k] != 0.0).collect();
            a[c * m + c] = 1.0;
            for &k in &nz_a {
                a[c * m + k] /= d;
            }
            for &k in &nz_inv {
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    a[i * m + c] = 0.0;
                    for &k in &nz_a {
                        a[i * m + k] -= f * a[c * m + k];
                    }
                    for &k in &nz_inv {
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(cols: &[&[f64]]) -> DenseColumns {
        let mut d = DenseColumns::new(cols[0].len());
        for c in cols {
            d.push(c.to_vec());
        }
        d
    }

    #[test]
    fn small_optimum() {
        // min -x1 - x2 s.t. x1 + 2x2 + s1 = 4, 3x1 + x2 + s2 = 6.
        let src = dense(&[&[1.0, 3.0], &[2.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let mut s = RevisedSimplex::new(src, vec![-1.0, -1.0, 0.0, 0.0], vec![4.0, 6.0], SimplexConfig::default()).unwrap();
        assert_eq!(s.solve().unwrap(), SimplexStatus::Optimal);
        assert!((s.objective() + 2.8).abs() < 1e-12);
        let x = s.primal();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
        let y = s.duals();
        assert!((y[0] * 4.0 + y[1] * 6.0 + 2.8).abs() < 1e-12);
    }

    #[test]
    fn infeasible_gives_ray() {
        // x1 + x2 = 1, x1 + x2 = 2.
        let src = dense(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let mut s = RevisedSimplex::new(src, vec![0.0, 0.0], vec![1.0, 2.0], SimplexConfig::default()).unwrap();
        assert_eq!(s.solve().unwrap(), SimplexStatus::Infeasible);
        let r = s.farkas().unwrap();
        assert!(r[0] + r[1] >= -1e-12);
        assert!(r[0] + 2.0 * r[1] < 0.0);
        assert_eq!(r.iter().fold(0.0f64, |a, x| a.max(x.abs())), 1.0);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 s.t. x1 - x2 = 1.
        let src = dense(&[&[1.0], &[-1.0]]);
        let mut s = RevisedSimplex::new(src, vec![-1.0, 0.0], vec![1.0], SimplexConfig::default()).unwrap();
        assert_eq!(s.solve().unwrap(), SimplexStatus::Unbounded);
    }

    #[test]
    fn warm_start_reaches_same_value() {
        let src = dense(&[&[1.0, 3.0], &[2.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let cost = vec![-1.0, -1.0, 0.0, 0.0];
        let mut s = RevisedSimplex::new(src.clone(), cost.clone(), vec![4.0, 6.0], SimplexConfig::default()).unwrap();
        s.solve().unwrap();
        let basis = s.basis();
        let mut w = RevisedSimplex::new(src, cost, vec![4.0, 6.0], SimplexConfig::default()).unwrap();
        assert!(w.set_basis(&basis));
        assert_eq!(w.solve().unwrap(), SimplexStatus::Optimal);
        assert_eq!(w.iterations(), 0);
        assert!((w.objective() - s.objective()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_basis() {
        let src = dense(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 0.0]]);
        let mut s = RevisedSimplex::new(src, vec![0.0; 3], vec![1.0, 1.0], SimplexConfig::default()).unwrap();
        assert!(!s.set_basis(&[0, 1]));
        assert!(!s.set_basis(&[0, 0]));
        assert!(!s.set_basis(&[0]));
    }

    #[test]
    fn rejects_negative_rhs() {
        let src = dense(&[&[1.0]]);
        assert!(RevisedSimplex::new(src, vec![0.0], vec![-1.0], SimplexConfig::default()).is_err());
    }
}
