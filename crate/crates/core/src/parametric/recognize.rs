//! Detects structured families in an arbitrary validated matrix so that a
//! closed-form test can replace the LP.

use serde::Serialize;

use super::{
    atoms_to_certificate, cross_bcm_member, cross_tdm_member, equi_bcm_member, toeplitz_sufficient,
    toeplitz_witness, two_dependence_member, two_dependence_witness, two_sector_member, CrossParams, EquiParams,
    ToeplitzParams, TwoSectorParams,
};
use crate::exact::{MembershipVerdict, MethodTag};
use crate::matrix::{Mode, ValidatedMatrix};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Pattern {
    Equi { alpha: f64, beta: f64 },
    Cross { betas: Vec<f64>, alphas: Vec<f64> },
    TwoDependence { alpha: f64, beta: f64 },
    TwoSector { alpha: f64, beta: f64, gamma: f64, d1: usize, d2: usize },
    /// Toeplitz with monotone lag differences; recognized only when the
    /// sufficient condition holds, since it is not a characterization.
    Toeplitz { alphas: Vec<f64> },
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= tolerance()
}

fn constant<'a>(mut xs: impl Iterator<Item = &'a f64>) -> Option<f64> {
    let first = *xs.next()?;
    xs.all(|&x| near(x, first)).then_some(first)
}

fn off_diagonal(m: &ValidatedMatrix) -> Vec<f64> {
    let d = m.d();
    (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect()
}

fn toeplitz_lags(m: &ValidatedMatrix) -> Option<Vec<f64>> {
    let d = m.d();
    let lags: Vec<f64> = (1..d).map(|k| m.get(0, k)).collect();
    (0..d)
        .all(|i| (i + 1..d).all(|j| near(m.get(i, j), lags[j - i - 1])))
        .then_some(lags)
}

/// First matching family, tried in the order equi, cross, two-dependent,
/// two-sector, Toeplitz.
pub fn recognize(m: &ValidatedMatrix) -> Option<Pattern> {
    let d = m.d();
    if d < 2 {
        return None;
    }
    let diag: Vec<f64> = (0..d).map(|i| m.get(i, i)).collect();
    let off = off_diagonal(m);
    if let (Some(alpha), Some(beta)) = (constant(diag.iter()), constant(off.iter())) {
        return Some(Pattern::Equi { alpha, beta });
    }
    let arrow = (0..d - 1).all(|i| (i + 1..d - 1).all(|j| near(m.get(i, j), 0.0)));
    if arrow && d >= 3 && (m.mode() == Mode::Bcm || diag.iter().all(|&x| x == 1.0)) {
        return Some(Pattern::Cross {
            betas: diag,
            alphas: (0..d - 1).map(|i| m.get(i, d - 1)).collect(),
        });
    }
    if m.mode() != Mode::Tdm {
        return None;
    }
    let lags = toeplitz_lags(m);
    if let Some(l) = &lags {
        if d >= 3 && l[2..].iter().all(|&x| near(x, 0.0)) {
            return Some(Pattern::TwoDependence { alpha: l[0], beta: l[1] });
        }
    }
    for d1 in 1..d {
        let d2 = d - d1;
        let block = |lo: usize, hi: usize| {
            (lo..hi).flat_map(move |i| (i + 1..hi).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect::<Vec<_>>()
        };
        let cross: Vec<f64> = (0..d1).flat_map(|i| (d1..d).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect();
        let (a, b) = (block(0, d1), block(d1, d));
        let alpha = if d1 >= 2 { constant(a.iter()) } else { Some(0.0) };
        let beta = if d2 >= 2 { constant(b.iter()) } else { Some(0.0) };
        if let (Some(alpha), Some(beta), Some(gamma)) = (alpha, beta, constant(cross.iter())) {
            return Some(Pattern::TwoSector {
                alpha,
                beta,
                gamma,
                d1,
                d2,
            });
        }
    }
    let l = lags?;
    toeplitz_sufficient(&ToeplitzParams::new(l.clone()).ok()?).then_some(Pattern::Toeplitz { alphas: l })
}

fn verdict(member: bool, witness: Option<crate::matrix::AtomVector>) -> MembershipVerdict {
    MembershipVerdict {
        member,
        method: MethodTag::Parametric,
        certificate: witness.filter(|_| member).map(|q| atoms_to_certificate(&q)),
        farkas_ray: None,
    }
}

/// Closed-form verdict for a recognized family. Positive TDM verdicts carry
/// a certificate for `T/d` whenever a witness construction applies; negative
/// verdicts carry no ray.
pub fn fast_path(m: &ValidatedMatrix) -> Option<(Pattern, MembershipVerdict)> {
    let pattern = recognize(m)?;
    let d = m.d();
    let tdm = m.mode() == Mode::Tdm;
    let v = match &pattern {
        Pattern::Equi { alpha, beta } if tdm => {
            let q = ToeplitzParams::new(vec![*beta; d - 1]).ok().and_then(|p| toeplitz_witness(&p).ok());
            verdict((0.0..=1.0).contains(beta), q)
        }
        Pattern::Equi { alpha, beta } => verdict(equi_bcm_member(&EquiParams::new(*alpha, *beta, d).ok()?), None),
        Pattern::Cross { alphas, .. } if tdm => verdict(cross_tdm_member(alphas), None),
        Pattern::Cross { betas, alphas } => {
            verdict(cross_bcm_member(&CrossParams::new(betas.clone(), alphas.clone()).ok()?), None)
        }
        Pattern::TwoDependence { alpha, beta } => {
            let member = two_dependence_member(*alpha, *beta, d).ok()?;
            let q = if member { two_dependence_witness(*alpha, *beta, d).ok() } else { None };
            let q = q.or_else(|| {
                let p = super::two_dependence_matrix(*alpha, *beta, d).ok()?;
                toeplitz_witness(&p).ok()
            });
            verdict(member, q)
        }
        Pattern::TwoSector {
            alpha,
            beta,
            gamma,
            d1,
            d2,
        } => verdict(two_sector_member(&TwoSectorParams::new(*alpha, *beta, *gamma, *d1, *d2).ok()?).ok()?, None),
        Pattern::Toeplitz { alphas } => verdict(true, toeplitz_witness(&ToeplitzParams::new(alphas.clone()).ok()?).ok()),
    };
    Some((pattern, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{check_membership, verify_certificate, Method};
    use crate::matrix::CandidateMatrix;

    fn tdm(rows: Vec<Vec<f64>>) -> ValidatedMatrix {
        CandidateMatrix::from_rows(rows).unwrap().validate(Mode::Tdm).unwrap()
    }

    #[test]
    fn recognizes_families() {
        let e = CandidateMatrix::from_fn(4, |i, j| if i == j { 0.5 } else { 1.0 / 6.0 }).unwrap().validate(Mode::Bcm).unwrap();
        assert!(matches!(recognize(&e), Some(Pattern::Equi { .. })));
        let (pat, v) = fast_path(&e).unwrap();
        assert!(matches!(pat, Pattern::Equi { .. }) && v.member);

        let t = tdm(vec![vec![1.0, 0.4, 0.3, 0.0], vec![0.4, 1.0, 0.4, 0.3], vec![0.3, 0.4, 1.0, 0.4], vec![0.0, 0.3, 0.4, 1.0]]);
        assert_eq!(recognize(&t), Some(Pattern::TwoDependence { alpha: 0.4, beta: 0.3 }));

        let c = tdm(vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.6], vec![0.5, 0.6, 1.0]]);
        assert!(matches!(recognize(&c), Some(Pattern::Cross { .. })));
        assert!(!fast_path(&c).unwrap().1.member);

        let s = super::super::TwoSectorParams::new(0.3, 0.6, 0.2, 2, 3).unwrap();
        let s = s.matrix().unwrap().validate(Mode::Tdm).unwrap();
        assert!(matches!(recognize(&s), Some(Pattern::TwoSector { d1: 2, d2: 3, .. })));

        let ar = super::super::ar1_toeplitz(0.5, 6).unwrap().matrix().unwrap().validate(Mode::Tdm).unwrap();
        assert!(matches!(recognize(&ar), Some(Pattern::Toeplitz { .. })));

        let generic = tdm(vec![vec![1.0, 0.2, 0.3], vec![0.2, 1.0, 0.4], vec![0.3, 0.4, 1.0]]);
        assert_eq!(recognize(&generic), None);
    }

    #[test]
    fn fast_path_agrees_with_lp_and_certificates_verify() {
        let cases = vec![
            super::super::ar1_toeplitz(0.5, 6).unwrap().matrix().unwrap(),
            super::super::two_dependence_matrix(2.0 / 3.0, 1.0 / 3.0, 7).unwrap().matrix().unwrap(),
            super::super::two_dependence_matrix(0.6, 0.0, 6).unwrap().matrix().unwrap(),
            super::super::two_dependence_matrix(0.4, 0.3, 4).unwrap().matrix().unwrap(),
            CandidateMatrix::from_fn(5, |i, j| if i == j { 1.0 } else { 0.35 }).unwrap(),
            super::super::TwoSectorParams::new(0.2, 0.9, 0.5, 3, 3).unwrap().matrix().unwrap(),
        ];
        for m in cases {
            let d = m.d();
            let t = m.clone().validate(Mode::Tdm).unwrap();
            let (_, v) = fast_path(&t).unwrap();
            assert_eq!(v.member, check_membership(&t, &Method::Full).unwrap().member, "{m:?}");
            if let Some(c) = &v.certificate {
                assert!(verify_certificate(&m.scaled(1.0 / d as f64), c, true).valid);
            }
        }
    }
}
