//! Automorphism groups of matrices, orbit counting and the symmetry-reduced
//! membership LP, whose columns are orbit sums of vertex columns.

use std::collections::VecDeque;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::{caratheodory_reduce, feasibility_over, Certificate, MembershipVerdict, MethodTag};
use crate::lp::{DenseColumns, LpError, RevisedSimplex, SimplexConfig};
use crate::matrix::{
    moment_len, pair_index, vertices_in_order, BinaryVertex, CandidateMatrix, MatrixError, Mode,
    ValidatedMatrix,
};

/// Largest `d` for which [`automorphism_group`] searches exhaustively.
pub const AUTOMORPHISM_SEARCH_CAP: usize = 10;
/// Largest `d` for which orbit tables are built by a full sweep.
pub const ORBIT_SWEEP_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("dimension {d} exceeds {cap}; supply generators instead")]
    DimensionTooLarge { d: usize, cap: usize },
    #[error("generator {0:?} is not a permutation of 0..d")]
    NotAPermutation(Vec<usize>),
    #[error("generator {0:?} does not fix the matrix")]
    NotAnAutomorphism(Vec<usize>),
    #[error("expected a BCM-mode matrix")]
    WrongMode,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

type Perm = Vec<usize>;

/// `(a ∘ b)(i) = a(b(i))`.
fn compose(a: &[usize], b: &[usize]) -> Perm {
    b.iter().map(|&x| a[x]).collect()
}

fn inverse(a: &[usize]) -> Perm {
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

fn is_identity(a: &[usize]) -> bool {
    a.iter().enumerate().all(|(i, &x)| i == x)
}

fn cycle_count(a: &[usize]) -> u32 {
    let mut seen = vec![false; a.len()];
    let mut c = 0;
    for s in 0..a.len() {
        if !seen[s] {
            c += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = a[x];
            }
        }
    }
    c
}

/// Image of a vertex: bit `i` moves to bit `σ(i)`.
pub fn permute_vertex(sigma: &[usize], v: BinaryVertex) -> BinaryVertex {
    let mut out = 0u64;
    let mut b = v.bits();
    while b != 0 {
        let i = b.trailing_zeros() as usize;
        out |= 1 << sigma[i];
        b &= b - 1;
    }
    BinaryVertex::from_mask(v.d(), out)
}

/// A subgroup of `S_d` stored as generators plus a Sims table (a complete
/// set of coset representatives for the point-stabilizer chain of
/// `0, 1, ..., d−1`), from which every element is enumerable.
#[derive(Debug, Clone)]
pub struct PermutationGroup {
    d: usize,
    generators: Vec<Perm>,
    /// `table[k][j]`: an element fixing `0..k` pointwise and mapping `k ↦ j`.
    table: Vec<Vec<Option<Perm>>>,
    strong: Vec<Vec<Perm>>,
}

impl Serialize for PermutationGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.generators.serialize(s)
    }
}

impl PermutationGroup {
    pub fn trivial(d: usize) -> Self {
        let mut table = vec![vec![None; d]; d];
        for (k, row) in table.iter_mut().enumerate() {
            row[k] = Some((0..d).collect());
        }
        Self {
            d,
            generators: Vec::new(),
            table,
            strong: vec![Vec::new(); d],
        }
    }

    /// Group generated by `generators` (0-based image lists).
    pub fn from_generators(d: usize, generators: &[Vec<usize>]) -> Result<Self, SymmetryError> {
        let mut g = Self::trivial(d);
        for p in generators {
            g.add_generator(p.clone())?;
        }
        Ok(g)
    }

    /// Full symmetric group on `d` points.
    pub fn symmetric(d: usize) -> Self {
        let mut gens = Vec::new();
        if d >= 2 {
            let mut swap: Perm = (0..d).collect();
            swap.swap(0, 1);
            gens.push(swap);
            gens.push((0..d).map(|i| (i + 1) % d).collect());
        }
        Self::from_generators(d, &gens).expect("valid generators")
    }

    /// `{id, i ↦ d−1−i}`.
    pub fn reversal(d: usize) -> Self {
        let rev: Perm = (0..d).rev().collect();
        Self::from_generators(d, &[rev]).expect("valid generator")
    }

    fn add_generator(&mut self, p: Perm) -> Result<(), SymmetryError> {
        let mut seen = vec![false; self.d];
        if p.len() != self.d || p.iter().any(|&x| x >= self.d || std::mem::replace(&mut seen[x], true)) {
            return Err(SymmetryError::NotAPermutation(p));
        }
        if !is_identity(&p) && !self.contains(&p) {
            self.generators.push(p.clone());
            self.insert(0, p);
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    pub fn order(&self) -> u128 {
        self.table
            .iter()
            .map(|row| row.iter().filter(|x| x.is_some()).count() as u128)
            .product()
    }

    pub fn contains(&self, p: &[usize]) -> bool {
        p.len() == self.d && self.sifts(0, p.to_vec())
    }

    fn sifts(&self, k: usize, mut p: Perm) -> bool {
        for i in k..self.d {
            match &self.table[i][p[i]] {
                None => return false,
                Some(s) => p = compose(&inverse(s), &p),
            }
        }
        true
    }

    // Incremental Schreier-Sims in the form of Knuth's Sims-table algorithm.
    fn insert(&mut self, k: usize, p: Perm) {
        if self.sifts(k, p.clone()) {
            return;
        }
        self.strong[k].push(p.clone());
        let reps: Vec<Perm> = self.table[k].iter().flatten().cloned().collect();
        for s in reps {
            self.close(k, compose(&p, &s));
        }
    }

    fn close(&mut self, k: usize, t: Perm) {
        let j = t[k];
        match &self.table[k][j] {
            None => {
                self.table[k][j] = Some(t.clone());
                let gens = self.strong[k].clone();
                for g in gens {
                    self.close(k, compose(&g, &t));
                }
            }
            Some(rep) => {
                let residue = compose(&inverse(rep), &t);
                self.insert(k + 1, residue);
            }
        }
    }

    /// Calls `f` on every element exactly once.
    pub fn for_each_element(&self, mut f: impl FnMut(&[usize])) {
        let id: Perm = (0..self.d).collect();
        self.walk(0, &id, &mut f);
    }

    fn walk(&self, k: usize, acc: &[usize], f: &mut impl FnMut(&[usize])) {
        if k == self.d {
            f(acc);
            return;
        }
        for rep in self.table[k].iter().flatten() {
            self.walk(k + 1, &compose(acc, rep), f);
        }
    }

    /// Orbits of the points `0..d`.
    pub fn point_orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.d];
        let mut out = Vec::new();
        for s in 0..self.d {
            if seen[s] {
                continue;
            }
            let mut orbit = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < orbit.len() {
                let x = orbit[k];
                for g in &self.generators {
                    if !seen[g[x]] {
                        seen[g[x]] = true;
                        orbit.push(g[x]);
                    }
                }
                k += 1;
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }

    /// Whether every element fixes `m` under simultaneous row/column
    /// permutation.
    pub fn fixes(&self, m: &CandidateMatrix) -> bool {
        self.generators.iter().all(|g| is_automorphism(m, g))
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Number of orbits of `{0,1}^d` under `g`, by Burnside's lemma
/// `N = |G|^{-1} Σ_σ 2^{cycles(σ)}`. Groups that are direct products of the
/// symmetric groups on their point orbits use the closed form `Π (|O_i|+1)`.
pub fn orbit_count(g: &PermutationGroup) -> u128 {
    let orbits = g.point_orbits();
    let order = g.order();
    if orbits.iter().map(|o| factorial(o.len())).product::<u128>() == order {
        return orbits.iter().map(|o| o.len() as u128 + 1).product();
    }
    let mut total: u128 = 0;
    g.for_each_element(|p| total += 1u128 << cycle_count(p));
    total / order
}

/// Orbit count by explicit enumeration of `{0,1}^d`.
pub fn orbit_count_direct(g: &PermutationGroup) -> Result<u128, SymmetryError> {
    Ok(orbit_representatives(g)?.len() as u128)
}

/// Orbit representatives (the `≺_d`-minimum of each orbit) with orbit sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTable {
    pub representatives: Vec<BinaryVertex>,
    pub sizes: Vec<u64>,
}

impl OrbitTable {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

fn orbit_of(g: &PermutationGroup, v: BinaryVertex) -> Vec<BinaryVertex> {
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::from([v]);
    seen.insert(v);
    let mut out = Vec::new();
    while let Some(x) = queue.pop_front() {
        out.push(x);
        for gen in &g.generators {
            let y = permute_vertex(gen, x);
            if seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    out
}

/// `≺_d`-minimum element of the orbit of `v`.
pub fn canonical(g: &PermutationGroup, v: BinaryVertex) -> BinaryVertex {
    orbit_of(g, v).into_iter().min().expect("orbit contains v")
}

fn sweep_orbits(g: &PermutationGroup, mut visit: impl FnMut(BinaryVertex, &[BinaryVertex])) -> Result<(), SymmetryError> {
    let d = g.d;
    if d > ORBIT_SWEEP_CAP {
        return Err(SymmetryError::DimensionTooLarge {
            d,
            cap: ORBIT_SWEEP_CAP,
        });
    }
    let mut seen = vec![false; 1 << d];
    let mut orbit = Vec::new();
    for v in vertices_in_order(d)? {
        if seen[v.bits() as usize] {
            continue;
        }
        orbit.clear();
        orbit.push(v);
        seen[v.bits() as usize] = true;
        let mut k = 0;
        while k < orbit.len() {
            let x = orbit[k];
            for gen in &g.generators {
                let y = permute_vertex(gen, x);
                if !seen[y.bits() as usize] {
                    seen[y.bits() as usize] = true;
                    orbit.push(y);
                }
            }
            k += 1;
        }
        visit(v, &orbit);
    }
    Ok(())
}

pub fn orbit_representatives(g: &PermutationGroup) -> Result<OrbitTable, SymmetryError> {
    let mut t = OrbitTable {
        representatives: Vec::new(),
        sizes: Vec::new(),
    };
    sweep_orbits(g, |rep, orbit| {
        t.representatives.push(rep);
        t.sizes.push(orbit.len() as u64);
    })?;
    Ok(t)
}

fn is_automorphism(m: &CandidateMatrix, p: &[usize]) -> bool {
    let d = m.d();
    p.len() == d && (0..d).all(|i| (0..d).all(|j| m.get(p[i], p[j]) == m.get(i, j)))
}

/// The group of all `σ` with `P_σ M P_σ^T = M` (exact equality), by
/// backtracking with row-fingerprint pruning.
pub fn automorphism_group(m: &CandidateMatrix) -> Result<PermutationGroup, SymmetryError> {
    let d = m.d();
    if d > AUTOMORPHISM_SEARCH_CAP {
        return Err(SymmetryError::DimensionTooLarge {
            d,
            cap: AUTOMORPHISM_SEARCH_CAP,
        });
    }
    let fingerprint = |i: usize| {
        let mut row: Vec<u64> = (0..d).filter(|&j| j != i).map(|j| (m.get(i, j) + 0.0).to_bits()).collect();
        row.sort_unstable();
        ((m.get(i, i) + 0.0).to_bits(), row)
    };
    let fp: Vec<_> = (0..d).map(fingerprint).collect();
    let mut g = PermutationGroup::trivial(d);
    for k in 0..d {
        for j in k + 1..d {
            if g.table[k][j].is_some() || fp[j] != fp[k] {
                continue;
            }
            let mut img: Vec<Option<usize>> = (0..d).map(|i| (i < k).then_some(i)).collect();
            let mut used = vec![false; d];
            used[..k].iter_mut().for_each(|u| *u = true);
            if !consistent(m, &img, k, j) {
                continue;
            }
            img[k] = Some(j);
            used[j] = true;
            if extend(m, &fp, &mut img, &mut used, k + 1) {
                let p: Perm = img.into_iter().map(|x| x.expect("complete")).collect();
                g.generators.push(p.clone());
                g.insert(0, p);
            }
        }
    }
    Ok(g)
}

fn consistent(m: &CandidateMatrix, img: &[Option<usize>], x: usize, y: usize) -> bool {
    m.get(y, y) == m.get(x, x) && img.iter().enumerate().all(|(a, ia)| ia.is_none_or(|ia| m.get(ia, y) == m.get(a, x)))
}

fn extend<F: PartialEq>(m: &CandidateMatrix, fp: &[F], img: &mut [Option<usize>], used: &mut [bool], x: usize) -> bool {
    let d = m.d();
    if x == d {
        return true;
    }
    for y in 0..d {
        if used[y] || fp[y] != fp[x] || !consistent(m, img, x, y) {
            continue;
        }
        img[x] = Some(y);
        used[y] = true;
        if extend(m, fp, img, used, x + 1) {
            return true;
        }
        img[x] = None;
        used[y] = false;
    }
    false
}

/// The group generated by `generators`, after checking that each fixes `m`.
pub fn group_from_generators(m: &CandidateMatrix, generators: &[Vec<usize>]) -> Result<PermutationGroup, SymmetryError> {
    let g = PermutationGroup::from_generators(m.d(), generators)?;
    if let Some(bad) = generators.iter().find(|p| !is_automorphism(m, p)) {
        return Err(SymmetryError::NotAnAutomorphism(bad.clone()));
    }
    Ok(g)
}

/// Orbits of the moment coordinates `(1, i, {i,j})` under `g`, as lists of
/// row indices.
fn coordinate_orbits(g: &PermutationGroup) -> Vec<Vec<usize>> {
    let d = g.d;
    let m = moment_len(d);
    let image = |sigma: &[usize], r: usize| -> usize {
        if r == 0 {
            0
        } else if r <= d {
            1 + sigma[r - 1]
        } else {
            let (i, j) = pair_of(d, r);
            let (a, b) = (sigma[i].min(sigma[j]), sigma[i].max(sigma[j]));
            pair_index(d, a, b)
        }
    };
    let mut seen = vec![false; m];
    let mut out = Vec::new();
    for s in 0..m {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut orbit = vec![s];
        let mut k = 0;
        while k < orbit.len() {
            for gen in &g.generators {
                let y = image(gen, orbit[k]);
                if !seen[y] {
                    seen[y] = true;
                    orbit.push(y);
                }
            }
            k += 1;
        }
        out.push(orbit);
    }
    out
}

fn pair_of(d: usize, r: usize) -> (usize, usize) {
    let mut k = 1 + d;
    for i in 0..d {
        let len = d - i - 1;
        if r < k + len {
            return (i, i + 1 + (r - k));
        }
        k += len;
    }
    unreachable!("row {r} is not a pair row for d = {d}")
}

/// Decides `B ∈ B_d` with one LP column per orbit of `{0,1}^d` under the
/// automorphism group of `B` (or under `group`, which must fix `B`).
pub fn check_bcm_symmetric(b: &ValidatedMatrix, group: Option<&PermutationGroup>) -> Result<MembershipVerdict, SymmetryError> {
    if b.mode() != Mode::Bcm {
        return Err(SymmetryError::WrongMode);
    }
    let owned;
    let g = match group {
        Some(g) => {
            if !g.fixes(b.matrix()) {
                let bad = g.generators.iter().find(|p| !is_automorphism(b.matrix(), p)).cloned().unwrap_or_default();
                return Err(SymmetryError::NotAnAutomorphism(bad));
            }
            g
        }
        None => {
            owned = automorphism_group(b.matrix())?;
            &owned
        }
    };
    let d = b.d();
    let m = moment_len(d);
    let mut cols = DenseColumns::new(m);
    let mut orbits: Vec<Vec<BinaryVertex>> = Vec::new();
    sweep_orbits(g, |_, orbit| {
        let mut sum = vec![0.0; m];
        for v in orbit {
            for (s, c) in sum.iter_mut().zip(v.column()) {
                *s += c as f64;
            }
        }
        cols.push(sum);
        orbits.push(orbit.to_vec());
    })?;
    let n = orbits.len();
    let p = b.matrix().moments();
    let mut s = RevisedSimplex::new(cols, vec![0.0; n], p.clone(), SimplexConfig::default())?;
    if s.find_feasible()? {
        let mut expanded = Certificate::default();
        let mut basic = s.basic_values();
        basic.sort_by_key(|&(j, _)| j);
        for (j, w) in basic {
            if w > 1e-14 {
                for v in &orbits[j] {
                    expanded.vertices.push(*v);
                    expanded.weights.push(w);
                }
            }
        }
        let cert = match caratheodory_reduce(d, &expanded) {
            Ok(c) => c,
            Err(_) => match feasibility_over(d, expanded.vertices.clone(), &p)? {
                Ok(c) => c,
                Err(_) => expanded,
            },
        };
        Ok(MembershipVerdict::member(MethodTag::Symmetric, cert))
    } else {
        // Averaging the ray over coordinate orbits makes it G-invariant, so its
        // value on any single column equals the orbit average.
        let ray = s.farkas().expect("ray stored");
        let mut avg = vec![0.0; m];
        for orbit in coordinate_orbits(g) {
            let mean = orbit.iter().map(|&r| ray[r]).sum::<f64>() / orbit.len() as f64;
            for r in orbit {
                avg[r] = mean;
            }
        }
        let scale = avg.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale > 0.0 {
            avg.iter_mut().for_each(|x| *x /= scale);
        }
        Ok(MembershipVerdict::non_member(MethodTag::Symmetric, avg))
    }
}
