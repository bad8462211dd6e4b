//! Separation for `C_d^T y ≥ 0` through a 0–∞ cut problem.
//!
//! On `K_{d+1}` (nodes `0..=d`) put `y_i` on edge `(0,i)` and the pair dual on
//! `(i,j)`, then add a node `∞` joined to every `v` with weight
//! `z_v = −Σ_{e∈δ(v)} y_e`. For `S' = {0} ∪ S` the column of the vertex
//! `v = 1_S` satisfies `a_v^T y = y_0 − cut(S')/2`, so every column is
//! nonnegative against `y` iff no cut containing `0` weighs more than `2 y_0`.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::exact::vertex_dots;
use crate::matrix::{moment_len, pair_index, BinaryVertex};
use crate::tolerance;

/// Largest `d` accepted by [`separation_oracle`].
pub const SEPARATION_CAP: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxcutError {
    #[error("dual vector of length {0} is not d(d+1)/2 + 1 for any d ≥ 1")]
    WrongLength(usize),
    #[error("dimension {d} exceeds the separation cap {cap}")]
    DimensionTooLarge { d: usize, cap: usize },
    #[error("cut side must contain node 0 and only nodes 0..={d}")]
    InvalidSubset { d: usize },
}

/// Weighted `K_{d+1}` plus the node `∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutGraph {
    d: usize,
    /// `(d+1)×(d+1)` symmetric weights, zero diagonal.
    w: Vec<f64>,
    /// Weight of `(v, ∞)`.
    z: Vec<f64>,
}

/// Recovers `d` from `|y| = d(d+1)/2 + 1`.
fn dim_from_len(len: usize) -> Option<usize> {
    (1..=64).find(|&d| moment_len(d) == len)
}

pub fn build_cut_graph(y: &[f64]) -> Result<CutGraph, MaxcutError> {
    let d = dim_from_len(y.len()).ok_or(MaxcutError::WrongLength(y.len()))?;
    let n = d + 1;
    let mut w = vec![0.0; n * n];
    let mut set = |u: usize, v: usize, x: f64| {
        w[u * n + v] = x;
        w[v * n + u] = x;
    };
    for i in 1..=d {
        set(0, i, y[i]);
    }
    for i in 1..=d {
        for j in i + 1..=d {
            set(i, j, y[pair_index(d, i - 1, j - 1)]);
        }
    }
    let z = (0..n).map(|v| -w[v * n..(v + 1) * n].iter().sum::<f64>()).collect();
    Ok(CutGraph { d, w, z })
}

impl CutGraph {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Weight of edge `(u, v)` inside `K_{d+1}`.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.w[u * (self.d + 1) + v]
    }

    /// Weight of edge `(v, ∞)`.
    pub fn z(&self, v: usize) -> f64 {
        self.z[v]
    }

    /// Total weight of edges leaving `S`, where `S` is a bit mask over nodes
    /// `0..=d` that must contain node 0 (`∞` is never in `S`).
    pub fn cut_weight(&self, s: u64) -> Result<f64, MaxcutError> {
        let n = self.d + 1;
        if s & 1 == 0 || (n < 64 && s >> n != 0) {
            return Err(MaxcutError::InvalidSubset { d: self.d });
        }
        let mut total = 0.0;
        for u in (0..n).filter(|u| s >> u & 1 == 1) {
            total += self.z[u];
            for v in (0..n).filter(|v| s >> v & 1 == 0) {
                total += self.weight(u, v);
            }
        }
        Ok(total)
    }

    /// One `u v weight` line per edge, `∞` written as `inf`.
    pub fn to_edge_list(&self) -> String {
        let n = self.d + 1;
        let mut out = String::new();
        for u in 0..n {
            for v in u + 1..n {
                writeln!(out, "{u} {v} {}", self.weight(u, v)).expect("string write");
            }
        }
        for v in 0..n {
            writeln!(out, "{v} inf {}", self.z[v]).expect("string write");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Separation {
    Feasible,
    /// A vertex whose column has `a_v^T y = slack < −τ`.
    Violated { vertex: BinaryVertex, slack: f64 },
}

/// Decides `a_v^T y ≥ −τ` for every vertex by maximizing the 0–∞ cut over all
/// `S ⊆ {1..d}`.
pub fn separation_oracle(y: &[f64], d: usize) -> Result<Separation, MaxcutError> {
    if y.len() != moment_len(d) {
        return Err(MaxcutError::WrongLength(y.len()));
    }
    if d > SEPARATION_CAP {
        return Err(MaxcutError::DimensionTooLarge {
            d,
            cap: SEPARATION_CAP,
        });
    }
    let tau = tolerance();
    if y[0] < -tau {
        return Ok(Separation::Violated {
            vertex: BinaryVertex::zero(d),
            slack: y[0],
        });
    }
    let g = build_cut_graph(y)?;
    // Gray-code sweep of S; `inner` tracks Σ_{e ⊆ S'} y_e = −cut(S')/2.
    let mut inner = 0.0;
    let mut s = 0u64;
    let mut best = (0.0, 0u64);
    for k in 1..1u64 << d {
        let i = k.trailing_zeros() as usize;
        let node = i + 1;
        let mut delta = g.weight(0, node);
        for j in (0..d).filter(|&j| j != i && s >> j & 1 == 1) {
            delta += g.weight(node, j + 1);
        }
        if s >> i & 1 == 1 {
            inner -= delta;
        } else {
            inner += delta;
        }
        s ^= 1 << i;
        if inner < best.0 {
            best = (inner, s);
        }
    }
    let max_cut = -2.0 * best.0;
    if max_cut <= 2.0 * y[0] + 2.0 * tau {
        return Ok(Separation::Feasible);
    }
    let vertex = BinaryVertex::from_mask(d, best.1);
    let mut slack = [0.0];
    vertex_dots(d, &[vertex], y, &mut slack);
    Ok(Separation::Violated {
        vertex,
        slack: slack[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(k: usize, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        v[k] = 1.0;
        v
    }

    #[test]
    fn graph_examples() {
        let g = build_cut_graph(&e(0, 7)).unwrap();
        assert!((0..4).all(|u| (0..4).all(|v| g.weight(u, v) == 0.0)));
        assert!((0..4).all(|v| g.z(v) == 0.0));
        let g = build_cut_graph(&e(1, 7)).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!((g.z(0), g.z(1), g.z(2), g.z(3)), (-1.0, -1.0, 0.0, 0.0));
        assert!(build_cut_graph(&[0.0; 5]).is_err());
    }

    #[test]
    fn unit_constant_dual_is_feasible() {
        assert_eq!(separation_oracle(&e(0, 7), 3).unwrap(), Separation::Feasible);
    }

    #[test]
    fn negative_constant_reports_zero_vertex() {
        let mut y = vec![0.0; 7];
        y[0] = -0.5;
        assert_eq!(
            separation_oracle(&y, 3).unwrap(),
            Separation::Violated {
                vertex: BinaryVertex::zero(3),
                slack: -0.5
            }
        );
    }

    #[test]
    fn star_and_full_cuts() {
        let y: Vec<f64> = (0..11).map(|k| (k as f64 * 0.37).sin()).collect();
        let g = build_cut_graph(&y).unwrap();
        let star: f64 = (1..=4).map(|i| g.weight(0, i)).sum::<f64>() + g.z(0);
        assert!((g.cut_weight(1).unwrap() - star).abs() < 1e-12);
        let all: f64 = (0..=4).map(|v| g.z(v)).sum();
        assert!((g.cut_weight(0b11111).unwrap() - all).abs() < 1e-12);
        assert!(g.cut_weight(0b10).is_err());
        assert!(g.cut_weight(1 << 5 | 1).is_err());
        assert_eq!(g.to_edge_list().lines().count(), 10 + 5);
    }

    proptest! {
        #[test]
        fn z_identity(y in proptest::collection::vec(-1.0f64..1.0, 11)) {
            let g = build_cut_graph(&y).unwrap();
            for v in 0..5 {
                let s: f64 = (0..5).filter(|&u| u != v).map(|u| g.weight(u, v)).sum();
                prop_assert!((g.z(v) + s).abs() < 1e-12);
            }
        }

        #[test]
        fn cut_matches_naive_edge_loop_and_inner_identity(y in proptest::collection::vec(-1.0f64..1.0, 16), s in 0u64..32) {
            let g = build_cut_graph(&y).unwrap();
            let sp = s << 1 | 1;
            let inside = |v: usize| v < 6 && sp >> v & 1 == 1;
            // Naive: enumerate every edge including those to ∞ (node 6 here).
            let mut naive = 0.0;
            let mut internal = 0.0;
            let mut degree_sum = 0.0;
            for u in 0..7 {
                for v in u + 1..7 {
                    let w = if v == 6 { g.z(u) } else { g.weight(u, v) };
                    if inside(u) != inside(v) { naive += w; }
                    if inside(u) && inside(v) { internal += w; }
                    if inside(u) { degree_sum += w; }
                    if inside(v) { degree_sum += w; }
                }
            }
            let cut = g.cut_weight(sp).unwrap();
            prop_assert!((cut - naive).abs() < 1e-12);
            prop_assert!((2.0 * internal - (degree_sum - cut)).abs() < 1e-9);
            // Column identity.
            let v = BinaryVertex::from_mask(5, s);
            let mut dot = [0.0];
            vertex_dots(5, &[v], &y, &mut dot);
            prop_assert!((dot[0] - (y[0] - cut / 2.0)).abs() < 1e-12);
        }
    }
}
