//! Two blocks of sizes `d1`, `d2` with within-block coefficients `α`, `β` and
//! a constant cross-block coefficient `γ`.
//!
//! Under the block symmetry group an atom is determined by how many
//! coordinates it hits in each block, so the membership LP has
//! `(d1+1)(d2+1)` variables. Working with orbit masses
//! `y_ij = C(d1,i) C(d2,j) x_ij` keeps every coefficient in `[0, 1]`: the
//! orbit of `(i, j)` covers a given coordinate of block one with fraction
//! `i/d1`, a given pair inside it with `i(i−1)/(d1(d1−1))`, and a given cross
//! pair with `(i/d1)(j/d2)`.

use serde::Serialize;

use super::{check_unit, ParametricError};
use crate::lp::{solve_with_basis, LpProblem, LpStatus, Sense};
use crate::matrix::{CandidateMatrix, MatrixError};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSectorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d1: usize,
    pub d2: usize,
}

impl TwoSectorParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, d1: usize, d2: usize) -> Result<Self, ParametricError> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        check_unit("gamma", gamma)?;
        if d1 == 0 || d2 == 0 {
            return Err(ParametricError::InvalidParameter("both blocks need at least one coordinate".into()));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            d1,
            d2,
        })
    }

    /// The unit-diagonal TDM.
    pub fn matrix(&self) -> Result<CandidateMatrix, MatrixError> {
        let d1 = self.d1;
        CandidateMatrix::from_fn(d1 + self.d2, |i, j| match (i < d1, j < d1) {
            _ if i == j => 1.0,
            (true, true) => self.alpha,
            (false, false) => self.beta,
            _ => self.gamma,
        })
    }
}

fn gamma_lp(alpha: f64, beta: f64, d1: usize, d2: usize) -> LpProblem {
    let d = (d1 + d2) as f64;
    let (f1, f2) = (d1 as f64, d2 as f64);
    let idx: Vec<(f64, f64)> = (0..=d1).flat_map(|i| (0..=d2).map(move |j| (i as f64, j as f64))).collect();
    let row = |f: &dyn Fn(f64, f64) -> f64| idx.iter().map(|&(i, j)| f(i, j)).collect::<Vec<f64>>();
    // Maximize the cross-pair probability, i.e. minimize its negative.
    let mut lp = LpProblem::new(row(&|i, j| -(i / f1) * (j / f2)));
    if d1 >= 2 {
        lp = lp.with_row(row(&|i, _| i * (i - 1.0) / (f1 * (f1 - 1.0))), Sense::Eq, alpha / d);
    }
    if d2 >= 2 {
        lp = lp.with_row(row(&|_, j| j * (j - 1.0) / (f2 * (f2 - 1.0))), Sense::Eq, beta / d);
    }
    lp.with_row(row(&|i, _| i / f1), Sense::Eq, 1.0 / d)
        .with_row(row(&|_, j| j / f2), Sense::Eq, 1.0 / d)
        .with_row(row(&|_, _| 1.0), Sense::Eq, 1.0)
}

fn solve_gamma(
    alpha: f64,
    beta: f64,
    d1: usize,
    d2: usize,
    warm: Option<&[usize]>,
) -> Result<(f64, Vec<usize>), ParametricError> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if d1 == 0 || d2 == 0 {
        return Err(ParametricError::InvalidParameter("both blocks need at least one coordinate".into()));
    }
    let sol = solve_with_basis(&gamma_lp(alpha, beta, d1, d2), warm)?;
    if sol.status != LpStatus::Optimal {
        return Err(ParametricError::LpStatus(format!("{:?}", sol.status)));
    }
    let d = (d1 + d2) as f64;
    Ok(((-sol.objective * d).clamp(0.0, 1.0), sol.basis))
}

/// Largest `γ` keeping the two-sector matrix a TDM, for `α, β ∈ [0, 1]`.
pub fn two_sector_gamma_upper(alpha: f64, beta: f64, d1: usize, d2: usize) -> Result<f64, ParametricError> {
    solve_gamma(alpha, beta, d1, d2, None).map(|r| r.0)
}

/// `γ_u` on the `(n+1) × (n+1)` grid `α, β ∈ {0, 1/n, …, 1}`, α-major, each
/// LP warm-started from its neighbour's basis. Returns `(α, β, γ_u)` rows.
pub fn two_sector_gamma_grid(d1: usize, d2: usize, n: usize) -> Result<Vec<(f64, f64, f64)>, ParametricError> {
    if n == 0 {
        return Err(ParametricError::InvalidParameter("grid needs at least one interval".into()));
    }
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    let mut basis: Option<Vec<usize>> = None;
    for a in 0..=n {
        for k in 0..=n {
            // Serpentine order keeps consecutive points adjacent.
            let b = if a % 2 == 0 { k } else { n - k };
            let (alpha, beta) = (a as f64 / n as f64, b as f64 / n as f64);
            let (g, bs) = solve_gamma(alpha, beta, d1, d2, basis.as_deref())?;
            basis = Some(bs);
            out.push((alpha, beta, g));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(out)
}

/// `0 ≤ γ ≤ γ_u(α, β)` up to τ.
pub fn two_sector_member(p: &TwoSectorParams) -> Result<bool, ParametricError> {
    let g = two_sector_gamma_upper(p.alpha, p.beta, p.d1, p.d2)?;
    Ok(p.gamma >= -tolerance() && p.gamma <= g + tolerance())
}

/// Inequality `a·α + b·β + c·γ + e ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Facet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

impl Facet {
    const fn new(a: f64, b: f64, c: f64, e: f64) -> Self {
        Self { a, b, c, e }
    }

    pub fn eval(&self, alpha: f64, beta: f64, gamma: f64) -> f64 {
        self.a * alpha + self.b * beta + self.c * gamma + self.e
    }
}

/// Box facets shared by every case: `α, β, γ ≥ 0` and `α, β ≤ 1`.
const BOX: [Facet; 5] = [
    Facet::new(1.0, 0.0, 0.0, 0.0),
    Facet::new(0.0, 1.0, 0.0, 0.0),
    Facet::new(0.0, 0.0, 1.0, 0.0),
    Facet::new(-1.0, 0.0, 0.0, 1.0),
    Facet::new(0.0, -1.0, 0.0, 1.0),
];

/// Stored facet lists for `(1,2)`, `(2,2)`, `(3,3)`, `(2,4)` and `(4,4)`.
/// For `(1,2)` there is no `α` and its coefficients are zero.
pub fn known_facets(d1: usize, d2: usize) -> Result<Vec<Facet>, ParametricError> {
    let upper: &[Facet] = match (d1, d2) {
        (1, 2) => {
            return Ok(vec![
                Facet::new(0.0, 1.0, 0.0, 0.0),
                Facet::new(0.0, 0.0, 1.0, 0.0),
                Facet::new(0.0, -1.0, 0.0, 1.0),
                Facet::new(0.0, 1.0, -2.0, 1.0),
            ])
        }
        (2, 2) => &[Facet::new(1.0, 0.0, -2.0, 1.0), Facet::new(0.0, 1.0, -2.0, 1.0)],
        (3, 3) => &[
            Facet::new(3.0, 0.0, -3.0, 1.0),
            Facet::new(0.0, 3.0, -3.0, 1.0),
            Facet::new(3.0, 1.0, -6.0, 2.0),
            Facet::new(1.0, 3.0, -6.0, 2.0),
        ],
        (2, 4) => &[
            Facet::new(1.0, 0.0, -2.0, 1.0),
            Facet::new(0.0, 6.0, -4.0, 1.0),
            Facet::new(1.0, 6.0, -8.0, 2.0),
            Facet::new(1.0, 3.0, -6.0, 2.0),
        ],
        (4, 4) => &[
            Facet::new(6.0, 0.0, -4.0, 1.0),
            Facet::new(0.0, 6.0, -4.0, 1.0),
            Facet::new(1.0, 2.0, -4.0, 1.0),
            Facet::new(2.0, 1.0, -4.0, 1.0),
            Facet::new(1.0, 6.0, -8.0, 2.0),
            Facet::new(6.0, 1.0, -8.0, 2.0),
        ],
        _ => return Err(ParametricError::UnknownCase { d1, d2 }),
    };
    Ok(BOX.iter().chain(upper).copied().collect())
}

/// Stored vertex lists `(α, β, γ)`; for `(1,2)` the `α` coordinate is 0.
pub fn known_vertices(d1: usize, d2: usize) -> Result<Vec<(f64, f64, f64)>, ParametricError> {
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;
    let top: &[(f64, f64, f64)] = match (d1, d2) {
        (1, 2) => return Ok(vec![(0.0, 0.0, 0.0), (0.0, 0.0, 0.5), (0.0, 1.0, 0.0), (0.0, 1.0, 1.0)]),
        (2, 2) => &[(1.0, 1.0, 1.0), (0.0, 0.0, 0.5), (0.0, 1.0, 0.5), (1.0, 0.0, 0.5)],
        (3, 3) => &[
            (1.0, 1.0, 1.0),
            (0.0, 0.0, third),
            (0.0, 1.0, third),
            (1.0, 0.0, third),
            (third, 1.0, 2.0 * third),
            (1.0, third, 2.0 * third),
        ],
        (2, 4) => &[
            (1.0, 1.0, 1.0),
            (0.0, 0.0, 0.25),
            (0.0, 1.0, 0.5),
            (1.0, 0.0, 0.25),
            (1.0, 0.5, 0.75),
            (1.0, sixth, 0.5),
            (0.0, third, 0.5),
        ],
        (4, 4) => &[
            (1.0, 1.0, 1.0),
            (0.0, 0.0, 0.25),
            (0.0, 1.0, 0.25),
            (1.0, 0.0, 0.25),
            (0.5, 1.0, 0.75),
            (1.0, 0.5, 0.75),
            (sixth, 1.0, 0.5),
            (1.0, sixth, 0.5),
        ],
        _ => return Err(ParametricError::UnknownCase { d1, d2 }),
    };
    let floor = [(0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0)];
    Ok(floor.iter().chain(top).copied().collect())
}

/// Every facet holds up to τ.
pub fn facets_member(facets: &[Facet], alpha: f64, beta: f64, gamma: f64) -> bool {
    facets.iter().all(|f| f.eval(alpha, beta, gamma) >= -tolerance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{check_tdm, Method};
    use crate::matrix::Mode;

    const CASES: [(usize, usize); 5] = [(1, 2), (2, 2), (3, 3), (2, 4), (4, 4)];

    #[test]
    fn gamma_examples() {
        assert!((two_sector_gamma_upper(0.0, 0.0, 2, 2).unwrap() - 0.5).abs() < 1e-9);
        assert!((two_sector_gamma_upper(1.0, 1.0 / 3.0, 3, 3).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!((two_sector_gamma_upper(0.0, 1.0 / 3.0, 2, 4).unwrap() - 0.5).abs() < 1e-9);
        assert!((two_sector_gamma_upper(1.0 / 6.0, 1.0, 4, 4).unwrap() - 0.5).abs() < 1e-9);
        assert!(two_sector_gamma_upper(1.5, 0.0, 2, 2).is_err());
        assert!(two_sector_gamma_upper(0.5, 0.0, 0, 2).is_err());
    }

    #[test]
    fn membership_examples() {
        for (d1, d2) in CASES {
            assert!(two_sector_member(&TwoSectorParams::new(1.0, 1.0, 1.0, d1, d2).unwrap()).unwrap());
        }
        assert!(!two_sector_member(&TwoSectorParams::new(0.0, 0.0, 0.6, 2, 2).unwrap()).unwrap());
        assert!(two_sector_member(&TwoSectorParams::new(1.0 / 6.0, 1.0, 0.5, 4, 4).unwrap()).unwrap());
    }

    #[test]
    fn facet_and_vertex_tables() {
        assert_eq!(known_facets(2, 2).unwrap().len(), 7);
        assert!(known_facets(3, 3).unwrap().contains(&Facet::new(3.0, 1.0, -6.0, 2.0)));
        assert_eq!(known_facets(1, 2).unwrap().len(), 4);
        assert!(known_facets(5, 5).is_err());
        assert!(known_vertices(3, 4).is_err());
        // Every stored vertex satisfies every stored facet, and at least three
        // facets are tight there.
        for (d1, d2) in CASES {
            let fs = known_facets(d1, d2).unwrap();
            for (a, b, g) in known_vertices(d1, d2).unwrap() {
                assert!(facets_member(&fs, a, b, g), "({d1},{d2}) ({a},{b},{g})");
                let tight = fs.iter().filter(|f| f.eval(a, b, g).abs() < 1e-12).count();
                assert!(tight >= if d1 == 1 { 2 } else { 3 });
            }
        }
    }

    #[test]
    fn single_coordinate_block_matches_table() {
        for k in 0..=10 {
            let beta = k as f64 / 10.0;
            let g = two_sector_gamma_upper(0.0, beta, 1, 2).unwrap();
            assert!((g - (1.0 + beta) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_matches_pointwise() {
        let grid = two_sector_gamma_grid(3, 3, 4).unwrap();
        assert_eq!(grid.len(), 25);
        for (a, b, g) in grid {
            assert!((g - two_sector_gamma_upper(a, b, 3, 3).unwrap()).abs() < 1e-9);
        }
        assert!(two_sector_gamma_grid(2, 2, 0).is_err());
    }

    #[test]
    fn agrees_with_full_lp() {
        for &(a, b, g) in &[(0.3, 0.6, 0.5), (0.3, 0.6, 0.6), (0.9, 0.1, 0.45), (0.5, 0.5, 0.7)] {
            let p = TwoSectorParams::new(a, b, g, 3, 2).unwrap();
            let t = p.matrix().unwrap().validate(Mode::Tdm).unwrap();
            assert_eq!(two_sector_member(&p).unwrap(), check_tdm(&t, &Method::Full).unwrap().member);
        }
    }
}
