//! Finite-dimensional unitary representations and their integrated forms.
//!
//! A representation may carry a degenerate padding block of dimension `k`:
//! the group acts on the first `d` coordinates only, and the integrated
//! algebra action is declared zero on the remaining `k`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{approx_identity, AlgebraElement};
use crate::error::{Error, Result};
use crate::group::{Element, Group, GroupKind};
use crate::linalg::{c, direct_sum, identity, is_unitary, operator_norm, range_projector, CMatrix, CVector, C64, RANK_TOL};

/// Largest `order · d²` for which a representation is stored densely.
const DENSE_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
enum Action {
    Dense(Vec<CMatrix>),
    /// Left regular action `U(g) e_h = e_{gh}`.
    Regular,
}

#[derive(Clone, Debug)]
pub struct UnitaryRep {
    group: Arc<Group>,
    dim: usize,
    padding: usize,
    action: Action,
}

impl UnitaryRep {
    pub fn regular(group: &Arc<Group>) -> Result<Self> {
        if matches!(group.kind(), GroupKind::IntegersWindowed { .. }) {
            return Err(Error::Unsupported("regular representation of a windowed group".into()));
        }
        Ok(UnitaryRep { group: group.clone(), dim: group.order(), padding: 0, action: Action::Regular })
    }

    pub fn trivial(group: &Arc<Group>, d: usize) -> Self {
        UnitaryRep {
            group: group.clone(),
            dim: d,
            padding: 0,
            action: Action::Dense(vec![identity(d); group.order()]),
        }
    }

    /// One-dimensional character `x ↦ e^{2πi k x / n}` of a cyclic, circle or
    /// windowed group (for the window, `n = 2W + 1`).
    pub fn character(group: &Arc<Group>, k: i64) -> Result<Self> {
        let n = match group.kind() {
            GroupKind::Cyclic { n } | GroupKind::CircleDiscretized { n } => *n as f64,
            GroupKind::IntegersWindowed { w } => (2 * w + 1) as f64,
            other => return Err(Error::Unsupported(format!("character of {other:?}"))),
        };
        let mats = group
            .elements()
            .map(|g| {
                let t = 2.0 * std::f64::consts::PI * (k as f64) * (group.value(g) as f64) / n;
                CMatrix::from_element(1, 1, C64::from_polar(1.0, t))
            })
            .collect();
        Ok(Self::from_parts(group, 1, mats))
    }

    /// Sign character of `S_3` or of a dihedral group.
    pub fn sign(group: &Arc<Group>) -> Result<Self> {
        let mats = match group.kind() {
            GroupKind::Symmetric3 => group
                .elements()
                .map(|g| {
                    let odd = matches!(g.index(), 1..=3);
                    CMatrix::from_element(1, 1, c(if odd { -1.0 } else { 1.0 }, 0.0))
                })
                .collect(),
            GroupKind::Dihedral { n } => group
                .elements()
                .map(|g| CMatrix::from_element(1, 1, c(if g.index() >= *n { -1.0 } else { 1.0 }, 0.0)))
                .collect(),
            other => return Err(Error::Unsupported(format!("sign character of {other:?}"))),
        };
        Ok(Self::from_parts(group, 1, mats))
    }

    /// Permutation action of `S_3` on `ℂ^3`.
    pub fn permutation(group: &Arc<Group>) -> Result<Self> {
        let mats = group
            .elements()
            .map(|g| {
                let p = group
                    .permutation(g)
                    .ok_or_else(|| Error::Unsupported("permutation representation needs S3".into()))?;
                let mut m = CMatrix::zeros(3, 3);
                for (j, &pj) in p.iter().enumerate() {
                    m[(pj, j)] = c(1.0, 0.0);
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(group, 3, mats))
    }

    /// Two-dimensional standard representation of `S_3` or `D_n`.
    pub fn standard(group: &Arc<Group>) -> Result<Self> {
        match group.kind() {
            GroupKind::Symmetric3 => {
                let perm = Self::permutation(group)?;
                let (a, b) = (1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt());
                let basis = CMatrix::from_row_slice(
                    3,
                    2,
                    &[c(a, 0.0), c(b, 0.0), c(-a, 0.0), c(b, 0.0), c(0.0, 0.0), c(-2.0 * b, 0.0)],
                );
                let mats = group.elements().map(|g| basis.adjoint() * perm.unitary(g) * &basis).collect();
                Ok(Self::from_parts(group, 2, mats))
            }
            GroupKind::Dihedral { n } => {
                let n = *n;
                let mats = group
                    .elements()
                    .map(|g| {
                        let (k, f) = (g.index() % n, g.index() / n);
                        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        let rot = CMatrix::from_row_slice(
                            2,
                            2,
                            &[c(t.cos(), 0.0), c(-t.sin(), 0.0), c(t.sin(), 0.0), c(t.cos(), 0.0)],
                        );
                        let refl = if f == 1 {
                            CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
                        } else {
                            identity(2)
                        };
                        rot * refl
                    })
                    .collect();
                Ok(Self::from_parts(group, 2, mats))
            }
            other => Err(Error::Unsupported(format!("standard representation of {other:?}"))),
        }
    }

    /// Representation from one matrix per element, validated for unitarity,
    /// `U(e) = I` and multiplicativity on every pair inside the group.
    pub fn explicit(group: &Arc<Group>, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), got: matrices.len() });
        }
        let d = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        if let Some(bad) = matrices.iter().find(|m| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.nrows().max(bad.ncols()) });
        }
        let rep = Self::from_parts(group, d, matrices);
        rep.validate(1e-10)?;
        Ok(rep)
    }

    fn from_parts(group: &Arc<Group>, dim: usize, mats: Vec<CMatrix>) -> Self {
        UnitaryRep { group: group.clone(), dim, padding: 0, action: Action::Dense(mats) }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let g = &self.group;
        for x in g.elements() {
            if !is_unitary(&self.unitary(x), tol) {
                return Err(Error::NotUnitary(format!("U({}) is not unitary", g.label(x))));
            }
        }
        if (self.unitary(g.identity()) - identity(self.dim)).camax() > tol {
            return Err(Error::NotUnitary("U(e) is not the identity".into()));
        }
        let mats = self.dense_matrices()?;
        for x in g.elements() {
            for y in g.elements() {
                let Ok(xy) = g.mul(x, y) else { continue };
                if (&mats[x.index()] * &mats[y.index()] - &mats[xy.index()]).camax() > tol {
                    return Err(Error::NotUnitary(format!(
                        "U({})U({}) differs from U({})",
                        g.label(x),
                        g.label(y),
                        g.label(xy)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Block direct sum; paddings are added and placed after both genuine blocks.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        let (a, b) = (self.dense_matrices()?, other.dense_matrices()?);
        let mats = a.iter().zip(&b).map(|(x, y)| direct_sum(x, y)).collect();
        let mut out = Self::from_parts(&self.group, self.dim + other.dim, mats);
        out.padding = self.padding + other.padding;
        Ok(out)
    }

    /// Adds `k` dimensions on which the algebra acts as zero.
    pub fn padded(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.padding += k;
        out
    }

    /// Unitarily equivalent representation `g ↦ W U(g) W†`.
    pub fn conjugate(&self, w: &CMatrix) -> Result<Self> {
        if w.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.nrows() });
        }
        if !is_unitary(w, 1e-10) {
            return Err(Error::NotUnitary("conjugating matrix".into()));
        }
        let mats = self.dense_matrices()?.iter().map(|m| w * m * w.adjoint()).collect();
        let mut out = Self::from_parts(&self.group, self.dim, mats);
        out.padding = self.padding;
        Ok(out)
    }

    /// Copy with `U(g)[0,0]` shifted by `eps`, bypassing validation.
    pub fn corrupted(&self, g: Element, eps: f64) -> Result<Self> {
        let mut mats = self.dense_matrices()?;
        mats[g.index()][(0, 0)] += c(eps, 0.0);
        let mut out = Self::from_parts(&self.group, self.dim, mats);
        out.padding = self.padding;
        Ok(out)
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    /// Dimension of the space the group acts on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    /// `d + k`: the space on which the integrated action is defined.
    pub fn ambient_dim(&self) -> usize {
        self.dim + self.padding
    }

    /// `U(g)` on the genuine block.
    pub fn unitary(&self, g: Element) -> CMatrix {
        match &self.action {
            Action::Dense(m) => m[g.index()].clone(),
            Action::Regular => {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for h in self.group.elements() {
                    let gh = self.group.mul(g, h).expect("finite kind");
                    m[(gh.index(), h.index())] = c(1.0, 0.0);
                }
                m
            }
        }
    }

    /// `U(g) ξ` for `ξ` in the genuine block.
    pub fn apply(&self, g: Element, xi: &CVector) -> CVector {
        match &self.action {
            Action::Dense(m) => &m[g.index()] * xi,
            Action::Regular => {
                let mut out = CVector::zeros(self.dim);
                for h in self.group.elements() {
                    out[self.group.mul(g, h).expect("finite kind").index()] = xi[h.index()];
                }
                out
            }
        }
    }

    /// `‖U(g)ξ − ξ‖`.
    pub fn displacement(&self, g: Element, xi: &CVector) -> f64 {
        (self.apply(g, xi) - xi).norm()
    }

    fn dense_matrices(&self) -> Result<Vec<CMatrix>> {
        match &self.action {
            Action::Dense(m) => Ok(m.clone()),
            Action::Regular => {
                if self.group.order() * self.dim * self.dim > DENSE_LIMIT {
                    return Err(Error::Unsupported("regular representation too large to densify".into()));
                }
                Ok(self.group.elements().map(|g| self.unitary(g)).collect())
            }
        }
    }

    /// `π(a) = Σ_g (c_g + w(g)φ(g)) U(g)` on the genuine block.
    pub fn genuine_operator(&self, a: &AlgebraElement) -> Result<CMatrix> {
        if a.group() != &self.group {
            return Err(Error::GroupMismatch);
        }
        let coeff = a.coefficients();
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for g in self.group.elements() {
            let z = coeff[g.index()];
            if z == C64::default() {
                continue;
            }
            match &self.action {
                Action::Dense(m) => out += &m[g.index()] * z,
                Action::Regular => {
                    for h in self.group.elements() {
                        out[(self.group.mul(g, h)?.index(), h.index())] += z;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `π(a)` on the ambient space, zero on the padding block.
    pub fn operator_of(&self, a: &AlgebraElement) -> Result<CMatrix> {
        let inner = self.genuine_operator(a)?;
        if self.padding == 0 {
            return Ok(inner);
        }
        Ok(direct_sum(&inner, &CMatrix::zeros(self.padding, self.padding)))
    }
}

/// Residuals of the *-morphism laws over a sample.
///
/// Product and adjoint residuals are Frobenius norms (upper bounds for the
/// operator norm); contractivity uses the exact operator norm.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StarAudit {
    pub product: f64,
    pub adjoint: f64,
    pub contractivity: f64,
}

impl StarAudit {
    pub fn max(&self) -> f64 {
        self.product.max(self.adjoint).max(self.contractivity)
    }
}

pub fn star_morphism_audit(rep: &UnitaryRep, sample: &[AlgebraElement]) -> Result<StarAudit> {
    if sample.is_empty() {
        return Err(Error::Precondition("audit sample is empty".into()));
    }
    let ops: Vec<CMatrix> = sample.par_iter().map(|a| rep.operator_of(a)).collect::<Result<_>>()?;
    let single: Vec<(f64, f64)> = sample
        .par_iter()
        .zip(&ops)
        .map(|(a, op)| {
            let adj = (rep.operator_of(&a.involute())? - op.adjoint()).norm();
            let contr = (operator_norm(op) - a.norm1()).max(0.0);
            Ok((adj, contr))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..sample.len()).flat_map(|i| (0..sample.len()).map(move |j| (i, j))).collect();
    let products: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ab = sample[i].convolve(&sample[j])?;
            Ok((rep.operator_of(&ab)? - &ops[i] * &ops[j]).norm())
        })
        .collect::<Result<_>>()?;
    Ok(StarAudit {
        product: products.into_iter().fold(0.0, f64::max),
        adjoint: single.iter().map(|s| s.0).fold(0.0, f64::max),
        contractivity: single.iter().map(|s| s.1).fold(0.0, f64::max),
    })
}

/// Orthogonal projector onto the non-degenerate part, computed two ways.
#[derive(Clone, Debug)]
pub struct NondegeneratePart {
    /// Projector onto the span of the columns of `π(a)` over the sample.
    pub svd: CMatrix,
    /// Limit of `π(e_m)` along the approximate identity.
    pub iterative: CMatrix,
    pub rank: usize,
    /// Level at which the iteration was declared converged.
    pub level: u32,
    /// `‖svd − iterative‖` (Frobenius).
    pub agreement: f64,
}

/// Non-degenerate part of `rep`. An empty sample means all Dirac masses.
pub fn nondegenerate_projection(rep: &UnitaryRep, sample: &[AlgebraElement], tol: f64) -> Result<NondegeneratePart> {
    let g = rep.group();
    let diracs: Vec<AlgebraElement>;
    let sample = if sample.is_empty() {
        diracs = g.elements().map(|x| AlgebraElement::dirac(g, x)).collect();
        &diracs[..]
    } else {
        sample
    };
    let n = rep.ambient_dim();
    let ops: Vec<CMatrix> = sample.par_iter().map(|a| rep.operator_of(a)).collect::<Result<_>>()?;
    let mut stacked = CMatrix::zeros(n, n * ops.len());
    for (i, op) in ops.iter().enumerate() {
        stacked.view_mut((0, i * n), (n, n)).copy_from(op);
    }
    let (svd, rank) = range_projector(&stacked, RANK_TOL);
    let (iterative, level) = cauchy_limit(g, tol, |e| rep.operator_of(e))?;
    let agreement = (&svd - &iterative).norm();
    Ok(NondegeneratePart { svd, iterative, rank, level, agreement })
}

/// Iterates `f(e_m)` for `m = 0, 1, …` until successive iterates differ by less
/// than `tol / 4`, returning the last iterate and its level.
fn cauchy_limit<F>(group: &Arc<Group>, tol: f64, f: F) -> Result<(CMatrix, u32)>
where
    F: Fn(&AlgebraElement) -> Result<CMatrix>,
{
    let limit = group.resolution_limit();
    let mut prev = f(&approx_identity(group, 0)?)?;
    let mut last_gap = f64::INFINITY;
    for m in 1..=limit {
        let next = f(&approx_identity(group, m)?)?;
        last_gap = (&next - &prev).norm();
        if last_gap < tol / 4.0 {
            return Ok((next, m));
        }
        prev = next;
    }
    Err(Error::NonConvergent(format!(
        "approximate-identity iterates still move by {last_gap:.3e} at level {limit}"
    )))
}

/// Group action recovered from an algebra action as the limit of `π(δ_g * e_m)`.
pub fn recover_group_action<F>(l1rep: F, group: &Arc<Group>, g: Element, tol: f64) -> Result<CMatrix>
where
    F: Fn(&AlgebraElement) -> Result<CMatrix>,
{
    let dg = AlgebraElement::dirac(group, g);
    cauchy_limit(group, tol, |e| l1rep(&dg.convolve(e)?)).map(|(m, _)| m)
}

/// Checks `‖π(μ)ξ − ξ‖ ≤ r` for a probability measure supported where
/// `‖U(g)ξ − ξ‖ ≤ r`, returning the slack `r − ‖π(μ)ξ − ξ‖`.
pub fn lemma22_check(rep: &UnitaryRep, mu: &AlgebraElement, xi: &CVector, r: f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    if xi.len() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), got: xi.len() });
    }
    if !mu.is_probability(1e-9) {
        return Err(Error::Precondition("μ must be a probability measure".into()));
    }
    for g in mu.support() {
        if rep.displacement(g, xi) > r + TOL {
            return Err(Error::Precondition(format!(
                "support element {} moves ξ by more than r",
                rep.group().label(g)
            )));
        }
    }
    let moved = rep.genuine_operator(mu)? * xi - xi;
    Ok(r - moved.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_gaussian_vector, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(g: &Arc<Group>, rng: &mut ChaCha8Rng) -> AlgebraElement {
        AlgebraElement::from_density_fn(g, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn shipped() -> Vec<UnitaryRep> {
        let s3 = Group::symmetric3();
        let z5 = Group::cyclic(5).unwrap();
        let d4 = Group::dihedral(4).unwrap();
        let t = Group::circle(32).unwrap();
        vec![
            UnitaryRep::regular(&s3).unwrap(),
            UnitaryRep::permutation(&s3).unwrap(),
            UnitaryRep::standard(&s3).unwrap(),
            UnitaryRep::sign(&s3).unwrap(),
            UnitaryRep::regular(&z5).unwrap(),
            UnitaryRep::character(&z5, 2).unwrap(),
            UnitaryRep::standard(&d4).unwrap(),
            UnitaryRep::sign(&d4).unwrap(),
            UnitaryRep::regular(&t).unwrap(),
            UnitaryRep::character(&t, 3).unwrap().padded(2),
        ]
    }

    #[test]
    fn shipped_reps_validate() {
        for rep in shipped() {
            rep.validate(1e-12).unwrap();
        }
    }

    #[test]
    fn z2_regular_operator() {
        let z2 = Group::cyclic(2).unwrap();
        let rep = UnitaryRep::regular(&z2).unwrap();
        let (a, b) = (c(0.3, 0.1), c(-1.2, 2.0));
        let op = rep.operator_of(&AlgebraElement::from_density(&z2, vec![a, b]).unwrap()).unwrap();
        assert_eq!(op, CMatrix::from_row_slice(2, 2, &[a, b, b, a]));
    }

    #[test]
    fn dirac_maps_to_group_element() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::permutation(&s3).unwrap().padded(1);
        for g in s3.elements() {
            let op = rep.operator_of(&AlgebraElement::dirac(&s3, g)).unwrap();
            assert_eq!(op.view((0, 0), (3, 3)), rep.unitary(g));
            assert_eq!(op.row(3).norm() + op.column(3).norm(), 0.0);
        }
    }

    #[test]
    fn averaged_character_vanishes() {
        let z3 = Group::cyclic(3).unwrap();
        let rep = UnitaryRep::character(&z3, 1).unwrap();
        let phi = AlgebraElement::from_density_fn(&z3, |_| c(1.0 / 3.0, 0.0));
        assert!(rep.operator_of(&phi).unwrap()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn permutation_rep_composes_right_to_left() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::permutation(&s3).unwrap();
        let a = s3.element_by_label("(1 2)").unwrap();
        let b = s3.element_by_label("(2 3)").unwrap();
        let ab = s3.mul(a, b).unwrap();
        assert_eq!(rep.unitary(a) * rep.unitary(b), rep.unitary(ab));
    }

    #[test]
    fn explicit_rejects_non_unitary() {
        let z2 = Group::cyclic(2).unwrap();
        let bad = vec![identity(1), CMatrix::from_element(1, 1, c(2.0, 0.0))];
        assert!(matches!(UnitaryRep::explicit(&z2, bad), Err(Error::NotUnitary(_))));
        let wrong = vec![identity(1), CMatrix::from_element(1, 1, c(0.0, 1.0))];
        assert!(UnitaryRep::explicit(&z2, wrong).is_err());
    }

    #[test]
    fn star_audit_passes_on_shipped_reps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for rep in shipped() {
            let sample: Vec<_> = (0..5).map(|_| random_density(rep.group(), &mut rng)).collect();
            let audit = star_morphism_audit(&rep, &sample).unwrap();
            assert!(audit.max() <= 1e-10, "{audit:?}");
        }
    }

    #[test]
    fn star_audit_detects_corruption() {
        let s3 = Group::symmetric3();
        let g = s3.element_by_label("(1 2)").unwrap();
        let rep = UnitaryRep::regular(&s3).unwrap().corrupted(g, 0.1).unwrap();
        let sample: Vec<_> = s3.elements().map(|x| AlgebraElement::dirac(&s3, x)).collect();
        assert!(star_morphism_audit(&rep, &sample).unwrap().max() >= 0.01);
    }

    #[test]
    fn nondegenerate_part_of_padded_rep() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::standard(&s3).unwrap().padded(3);
        let nd = nondegenerate_projection(&rep, &[], 1e-6).unwrap();
        assert_eq!(nd.rank, 2);
        assert!(nd.agreement <= 1e-10);
        let mut expect = CMatrix::zeros(5, 5);
        expect.view_mut((0, 0), (2, 2)).copy_from(&identity(2));
        assert!((nd.svd - expect).norm() < 1e-10);
    }

    #[test]
    fn perpendicular_to_range_iff_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z4 = Group::cyclic(4).unwrap();
        let w = random_unitary(4, &mut rng);
        let rep = UnitaryRep::regular(&z4).unwrap().conjugate(&w).unwrap().padded(2);
        let sample: Vec<_> = (0..4).map(|_| random_density(&z4, &mut rng)).collect();
        let nd = nondegenerate_projection(&rep, &sample, 1e-6).unwrap();
        let p = &nd.svd;
        for _ in 0..20 {
            let v = random_gaussian_vector(6, &mut rng);
            let perp = &v - p * &v;
            for a in &sample {
                assert!((rep.operator_of(a).unwrap() * &perp).norm() <= 1e-10);
            }
            let inside = p * &v;
            let hit: f64 = sample.iter().map(|a| (rep.operator_of(a).unwrap() * &inside).norm()).sum();
            assert!(inside.norm() < 1e-12 || hit > 1e-10);
        }
    }

    #[test]
    fn recovery_is_exact_on_discrete_kinds() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap().padded(1);
        for g in s3.elements() {
            let u = recover_group_action(|a| rep.operator_of(a), &s3, g, 1e-12).unwrap();
            assert!((u.view((0, 0), (6, 6)) - rep.unitary(g)).norm() < 1e-14);
            assert!(u.row(6).norm() == 0.0 && u.column(6).norm() == 0.0);
        }
    }

    #[test]
    fn recovery_on_the_circle_is_resolution_limited() {
        let t = Group::circle(256).unwrap();
        let g = t.element(5).unwrap();
        let low = UnitaryRep::character(&t, 1).unwrap();
        let u = recover_group_action(|a| low.operator_of(a), &t, g, 1e-2).unwrap();
        assert!((u - low.unitary(g)).norm() <= 1e-3);
        // the Nyquist frequency of the regular representation never settles
        let reg = UnitaryRep::regular(&t).unwrap();
        let r = recover_group_action(|a| reg.operator_of(a), &t, g, 1e-6);
        assert!(matches!(r, Err(Error::NonConvergent(_))));
    }

    #[test]
    fn lemma22_examples() {
        let z6 = Group::cyclic(6).unwrap();
        let rep = UnitaryRep::regular(&z6).unwrap();
        let xi = CVector::from_element(6, c(0.4, 0.0));
        let mu = AlgebraElement::uniform(&z6);
        assert!(lemma22_check(&rep, &mu, &xi, 0.0).unwrap().abs() < 1e-15);
        let g = z6.element(2).unwrap();
        let v = CVector::from_fn(6, |i, _| c(i as f64, 0.0));
        let r = rep.displacement(g, &v);
        assert!(lemma22_check(&rep, &AlgebraElement::dirac(&z6, g), &v, r).unwrap() >= -1e-12);
        assert!(matches!(
            lemma22_check(&rep, &AlgebraElement::dirac(&z6, g), &v, r / 2.0),
            Err(Error::Precondition(_))
        ));
    }
}
