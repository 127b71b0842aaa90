//! Invariant vectors, Kazhdan constants, the covers `K_{φ,m}` and the
//! predicate `Φ_{K,φ}` whose zero set is `Fix_φ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::group::Element;
use crate::linalg::{c, hermitian_eigen, identity, random_unit_vector, to_pairs, CMatrix, CVector};
use crate::optimize::start_seed;
use crate::representation::UnitaryRep;
use crate::structure::sort_distance;

/// Eigenvalues of `Σ (U−I)†(U−I)` below this count as fixed directions.
const FIXED_TOL: f64 = 1e-10;
/// Default truncation level of `Φ`.
pub const PHI_LEVEL_CAP: u32 = 20;

/// Orthogonal projector onto the vectors fixed by every generator.
pub fn invariant_projection(rep: &UnitaryRep) -> CMatrix {
    let basis = fixed_basis(rep);
    &basis * basis.adjoint()
}

fn generator_form(rep: &UnitaryRep) -> CMatrix {
    let d = rep.dim();
    let mut m = CMatrix::zeros(d, d);
    for g in rep.group().generators() {
        let a = rep.unitary(g) - identity(d);
        m += a.adjoint() * &a;
    }
    m
}

/// Orthonormal bases of the fixed vectors and of their complement.
fn split_basis(rep: &UnitaryRep) -> (CMatrix, CMatrix) {
    let (vals, vecs) = hermitian_eigen(&generator_form(rep));
    let cut = FIXED_TOL * vals.last().copied().unwrap_or(0.0).max(1.0);
    let pick = |fixed: bool| -> CMatrix {
        let cols: Vec<CVector> = (0..vals.len()).filter(|&i| (vals[i] <= cut) == fixed).map(|i| vecs.column(i).into_owned()).collect();
        if cols.is_empty() {
            CMatrix::zeros(rep.dim(), 0)
        } else {
            CMatrix::from_columns(&cols)
        }
    };
    (pick(true), pick(false))
}

fn fixed_basis(rep: &UnitaryRep) -> CMatrix {
    split_basis(rep).0
}

/// Orthonormal basis of the complement of the fixed vectors.
fn moving_basis(rep: &UnitaryRep) -> CMatrix {
    split_basis(rep).1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KazhdanOptions {
    pub starts: usize,
    pub seed: u64,
}

impl Default for KazhdanOptions {
    fn default() -> Self {
        KazhdanOptions { starts: 64, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KazhdanReport {
    /// `min_{ξ ⟂ Fix, ‖ξ‖=1} max_{g∈Q} ‖U(g)ξ − ξ‖` as found.
    pub kappa: f64,
    /// `sqrt(λ_min(Δ_⊥)/|Q|)`.
    pub lower: f64,
    /// `sqrt(λ_min(Δ_⊥))`.
    pub upper: f64,
    /// `sqrt(max_w λ_min(Σ w_g A_g))`, a lower bound on κ.
    pub dual: f64,
    /// `κ` equals the dual bound by convexity of the joint numerical range.
    pub exact: bool,
    pub lambda_min: f64,
    pub witness: Vec<[f64; 2]>,
    #[serde(rename = "Q")]
    pub q: Vec<String>,
    pub trials: usize,
}

impl KazhdanReport {
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        let k2 = self.kappa * self.kappa;
        self.lower * self.lower <= k2 + tol && k2 <= self.upper * self.upper + tol
    }
}

/// Forms `A_g = B†(2I − U(g) − U(g)†)B` on the complement.
fn restricted_forms(rep: &UnitaryRep, q: &[Element], basis: &CMatrix) -> Vec<CMatrix> {
    let d = rep.dim();
    q.iter()
        .map(|&g| {
            let u = rep.unitary(g);
            let a = identity(d) * c(2.0, 0.0) - &u - u.adjoint();
            let f = basis.adjoint() * a * basis;
            (&f + f.adjoint()) * c(0.5, 0.0)
        })
        .collect()
}

fn form(a: &CMatrix, y: &CVector) -> f64 {
    crate::linalg::inner(y, &(a * y)).re
}

fn max_form(forms: &[CMatrix], y: &CVector) -> f64 {
    forms.iter().map(|a| form(a, y)).fold(f64::NEG_INFINITY, f64::max)
}

fn combination(forms: &[CMatrix], w: &[f64]) -> CMatrix {
    let r = forms[0].nrows();
    forms.iter().zip(w).fold(CMatrix::zeros(r, r), |acc, (a, &t)| acc + a * c(t, 0.0))
}

fn lowest(m: &CMatrix) -> (f64, CMatrix, Vec<f64>) {
    let (vals, vecs) = hermitian_eigen(m);
    (vals[0], vecs, vals)
}

/// Minimizes the smoothed maximum of the forms on the unit sphere, sharpening
/// the smoothing in stages, and returns the final point.
fn descend(forms: &[CMatrix], mut y: CVector) -> CVector {
    let scale = forms.iter().map(|a| a.norm()).fold(1e-300, f64::max);
    y /= c(y.norm(), 0.0);
    for beta in [1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7] {
        let b = beta / scale;
        let smooth = |y: &CVector| -> (f64, Vec<f64>) {
            let qs: Vec<f64> = forms.iter().map(|a| form(a, y)).collect();
            let top = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ws: Vec<f64> = qs.iter().map(|v| (b * (v - top)).exp()).collect();
            let z: f64 = ws.iter().sum();
            (top + z.ln() / b, ws.into_iter().map(|w| w / z).collect())
        };
        let (mut val, mut ws) = smooth(&y);
        let mut step = 1.0 / scale;
        for _ in 0..300 {
            let grad = forms.iter().zip(&ws).fold(CVector::zeros(y.len()), |acc, (a, &w)| acc + a * &y * c(2.0 * w, 0.0));
            let tangent = &grad - &y * crate::linalg::inner(&y, &grad);
            let gn = tangent.norm();
            if gn < 1e-14 * scale {
                break;
            }
            let mut t = step;
            let mut moved = false;
            while t > 1e-16 / scale {
                let mut cand = &y - &tangent * c(t, 0.0);
                cand /= c(cand.norm(), 0.0);
                let (cv, cw) = smooth(&cand);
                if cv < val {
                    let gain = val - cv;
                    y = cand;
                    val = cv;
                    ws = cw;
                    step = (2.0 * t).min(4.0 / scale);
                    moved = gain > 1e-15 * scale;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }
    y
}

/// `max_w λ_min(Σ w_g A_g)` over the simplex with a maximizing weight.
fn dual_bound(forms: &[CMatrix]) -> (f64, Vec<f64>) {
    let k = forms.len();
    if k == 1 {
        return (lowest(&forms[0]).0, vec![1.0]);
    }
    if k == 2 {
        // concave in t; golden-section search
        let f = |t: f64| lowest(&combination(forms, &[t, 1.0 - t])).0;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            }
        }
        let mut best = (f(0.5 * (a + b)), vec![0.5 * (a + b), 1.0 - 0.5 * (a + b)]);
        for t in [0.0, 1.0] {
            let v = f(t);
            if v > best.0 {
                best = (v, vec![t, 1.0 - t]);
            }
        }
        return best;
    }
    // conditional gradient on the simplex
    let mut w = vec![1.0 / k as f64; k];
    let mut best = (f64::NEG_INFINITY, w.clone());
    for it in 0..400 {
        let (val, vecs, _) = lowest(&combination(forms, &w));
        if val > best.0 {
            best = (val, w.clone());
        }
        let v = vecs.column(0).into_owned();
        let s: Vec<f64> = forms.iter().map(|a| form(a, &v)).collect();
        let j = (0..k).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(0);
        let gamma = 2.0 / (it as f64 + 3.0);
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = (1.0 - gamma) * *wi + if i == j { gamma } else { 0.0 };
        }
    }
    best
}

/// A point of the eigenspace of `λ_min(Σ w A)` on which the active forms agree.
fn equalizing_point(forms: &[CMatrix], w: &[f64]) -> CVector {
    let (vals, vecs) = hermitian_eigen(&combination(forms, w));
    let tol = 1e-8 * vals.last().copied().unwrap_or(1.0).abs().max(1.0);
    let cols: Vec<CVector> = (0..vals.len()).filter(|&i| vals[i] <= vals[0] + tol).map(|i| vecs.column(i).into_owned()).collect();
    let v0 = cols[0].clone();
    if forms.len() != 2 || cols.len() == 1 {
        return v0;
    }
    let v = CMatrix::from_columns(&cols);
    let diff = v.adjoint() * (&forms[0] - &forms[1]) * &v;
    let (dv, de) = hermitian_eigen(&((&diff + diff.adjoint()) * c(0.5, 0.0)));
    let (lo, hi) = (dv[0], dv[dv.len() - 1]);
    if lo >= 0.0 || hi <= 0.0 {
        return &v * de.column(if lo >= 0.0 { 0 } else { dv.len() - 1 });
    }
    // cos²θ lo + sin²θ hi = 0
    let s2 = -lo / (hi - lo);
    let y = de.column(0) * c((1.0 - s2).sqrt(), 0.0) + de.column(dv.len() - 1) * c(s2.sqrt(), 0.0);
    &v * y
}

/// Kazhdan constant of `rep` for the finite set `Q` on the complement of
/// the fixed vectors.
pub fn kazhdan_constant(rep: &UnitaryRep, q: &[Element], opts: &KazhdanOptions) -> Result<KazhdanReport> {
    if q.is_empty() {
        return Err(Error::Precondition("Q must be nonempty".into()));
    }
    let basis = moving_basis(rep);
    let r = basis.ncols();
    if r == 0 {
        return Err(Error::Undefined);
    }
    let forms = restricted_forms(rep, q, &basis);
    let lap = forms.iter().fold(CMatrix::zeros(r, r), |acc, a| acc + a);
    let (lambda_min, lap_vecs, _) = lowest(&lap);
    let (dual, w) = dual_bound(&forms);
    let mut candidates: Vec<CVector> = vec![lap_vecs.column(0).into_owned(), equalizing_point(&forms, &w)];
    let starts: Vec<CVector> = (0..opts.starts)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(opts.seed, k));
            random_unit_vector(r, &mut rng)
        })
        .collect();
    let local: Vec<CVector> = starts.into_par_iter().map(|y| descend(&forms, y)).collect();
    candidates.extend(local);
    let mut best = 0;
    let values: Vec<f64> = candidates.iter().map(|y| max_form(&forms, y)).collect();
    for (k, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = k;
        }
    }
    // quadratic forms carry rounding of order ε‖A‖; snap that to zero
    let noise = 1e-13 * forms.iter().map(|a| a.norm()).fold(1.0, f64::max);
    let snap = |v: f64| if v <= noise { 0.0 } else { v };
    let (k2, lambda_min, dual) = (snap(values[best]), snap(lambda_min), snap(dual));
    let witness = &basis * &candidates[best];
    let exact = q.len() <= 2 || (q.len() == 3 && r >= 3);
    Ok(KazhdanReport {
        kappa: k2.sqrt(),
        lower: (lambda_min / q.len() as f64).sqrt(),
        upper: lambda_min.sqrt(),
        dual: dual.sqrt(),
        exact,
        lambda_min,
        witness: to_pairs(&witness),
        q: q.iter().map(|&g| rep.group().label(g)).collect(),
        trials: opts.starts,
    })
}

/// `δ_Q(ξ) = max_{g∈Q} ‖U(g)ξ − ξ‖`.
pub fn displacement_over(rep: &UnitaryRep, q: &[Element], xi: &CVector) -> f64 {
    q.iter().map(|&g| rep.displacement(g, xi)).fold(0.0, f64::max)
}

/// Factorization `k = g h` with `g` in the cover and `h ∈ U_{φ,m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub k: Element,
    pub g: Element,
    pub h: Element,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverLevel {
    pub m: u32,
    /// `U_{φ,m} = {g : ‖φ − gφ‖₁ < 2^{-m}}`.
    pub neighborhood: Vec<Element>,
    pub cover: Vec<Element>,
    pub factorizations: Vec<Factorization>,
}

impl CoverLevel {
    pub fn contains(&self, g: Element) -> bool {
        self.neighborhood.binary_search(&g).is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct CoverFamily {
    pub phi: AlgebraElement,
    pub k: Vec<Element>,
    pub levels: Vec<CoverLevel>,
}

/// Greedy cover of `K` by translates `g U_{φ,m}`, sweeping `K` in order.
pub fn build_cover(phi: &AlgebraElement, k: &[Element], m: u32) -> Result<CoverLevel> {
    let g = phi.group();
    let threshold = 0.5f64.powi(m as i32);
    let mut rho = Vec::with_capacity(g.order());
    for x in g.elements() {
        rho.push(phi.rho(x)?);
    }
    let neighborhood: Vec<Element> = g.elements().filter(|x| rho[x.index()] < threshold).collect();
    if !g.is_discrete() && neighborhood.len() <= 1 && k.iter().any(|&x| x != g.identity()) {
        return Err(Error::UncoverableAtResolution(format!(
            "U_(φ,{m}) is only the identity at this resolution"
        )));
    }
    let mut sorted = k.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut cover: Vec<Element> = Vec::new();
    let mut factorizations = Vec::with_capacity(sorted.len());
    for &x in &sorted {
        let mut found = None;
        for &c0 in &cover {
            let h = g.mul(g.inverse(c0), x)?;
            if rho[h.index()] < threshold {
                found = Some((c0, h));
                break;
            }
        }
        let (gg, h) = match found {
            Some(f) => f,
            None => {
                if rho[g.identity().index()] >= threshold {
                    return Err(Error::UncoverableAtResolution(format!("{} has no factorization", g.label(x))));
                }
                cover.push(x);
                (x, g.identity())
            }
        };
        factorizations.push(Factorization { k: x, g: gg, h });
    }
    Ok(CoverLevel { m, neighborhood, cover, factorizations })
}

impl CoverFamily {
    /// Levels `0..=top`.
    pub fn build(phi: &AlgebraElement, k: &[Element], top: u32) -> Result<Self> {
        let levels = (0..=top).map(|m| build_cover(phi, k, m)).collect::<Result<_>>()?;
        Ok(CoverFamily { phi: phi.clone(), k: k.to_vec(), levels })
    }

    /// Default truncation `min(M_res, 20)`.
    pub fn default_level(phi: &AlgebraElement) -> u32 {
        phi.group().resolution_limit().min(PHI_LEVEL_CAP)
    }

    pub fn top(&self) -> u32 {
        self.levels.last().map(|l| l.m).unwrap_or(0)
    }
}

/// `Φ` truncated at `M`, as the interval `[value, value + 2^{-M}‖ξ‖]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub value: f64,
    pub upper: f64,
    /// Level attaining the maximum.
    pub argmax: u32,
}

/// `α_{K,φ,m}(ξ) = max_{g∈K_{φ,m}} ‖gξ − ξ‖`.
pub fn alpha(rep: &UnitaryRep, level: &CoverLevel, xi: &CVector) -> f64 {
    displacement_over(rep, &level.cover, xi)
}

const MEMBERSHIP_TOL: f64 = 1e-8;

fn require_in_sort(rep: &UnitaryRep, phi: &AlgebraElement, xi: &CVector) -> Result<()> {
    if xi.len() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), got: xi.len() });
    }
    let d = sort_distance(&rep.genuine_operator(phi)?, xi).distance;
    if d > MEMBERSHIP_TOL {
        return Err(Error::Precondition(format!("vector lies at distance {d:.3e} from S_φ")));
    }
    Ok(())
}

pub fn phi_predicate(rep: &UnitaryRep, family: &CoverFamily, xi: &CVector, top: u32) -> Result<PhiValue> {
    let g = rep.group();
    if top > g.resolution_limit() {
        return Err(Error::ResolutionExceeded { level: top, limit: g.resolution_limit() });
    }
    if top > family.top() {
        return Err(Error::Precondition(format!("cover family stops at level {}", family.top())));
    }
    require_in_sort(rep, &family.phi, xi)?;
    let mut value: f64 = 0.0;
    let mut argmax = 0;
    for level in &family.levels[..=top as usize] {
        let v = 0.5f64.powi(level.m as i32) * alpha(rep, level, xi);
        if v > value {
            value = v;
            argmax = level.m;
        }
    }
    Ok(PhiValue { value, upper: value + 0.5f64.powi(top as i32) * xi.norm(), argmax })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardCheck {
    pub holds: bool,
    /// `2^{-m} − max_{f∈K} ‖fξ − ξ‖`.
    pub slack: f64,
    pub phi_upper: f64,
}

/// If `Φ(ξ) < 2^{-2m-2}` then `max_{f∈K} ‖fξ − ξ‖ < 2^{-m}`.
pub fn theorem42_forward(rep: &UnitaryRep, family: &CoverFamily, xi: &CVector, m: u32) -> Result<ForwardCheck> {
    let top = family.top();
    if m + 1 > top {
        return Err(Error::NotApplicable(format!("level {} exceeds the cover family", m + 1)));
    }
    let phi = phi_predicate(rep, family, xi, top)?;
    let threshold = 0.5f64.powi(2 * m as i32 + 2);
    if phi.upper >= threshold {
        return Err(Error::NotApplicable(format!("Φ upper bound {:.3e} ≥ {threshold:.3e}", phi.upper)));
    }
    let moved = displacement_over(rep, &family.k, xi);
    let slack = 0.5f64.powi(m as i32) - moved;
    Ok(ForwardCheck { holds: slack > 0.0, slack, phi_upper: phi.upper })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixDistance {
    /// `‖ξ − Pξ‖ = d(ξ, Fix_φ)`.
    pub distance: f64,
    pub nearest: Vec<[f64; 2]>,
    /// Distance from `Pξ` to `S_φ`.
    pub membership_residual: f64,
    /// `‖U(g)Pξ − Pξ‖` maximized over generators.
    pub invariance_residual: f64,
    pub delta_q: f64,
    /// `δ_Q(ξ)/κ`, absent when κ is undefined.
    pub bound: Option<f64>,
    pub notice: Option<String>,
}

impl FixDistance {
    pub fn bound_violated(&self, tol: f64) -> bool {
        self.bound.map(|b| self.distance > b + tol).unwrap_or(false)
    }
}

/// Distance from `ξ ∈ S_φ` to `Fix_φ` for a probability density `φ`, with the
/// Kazhdan bound `‖ξ − Pξ‖ ≤ δ_Q(ξ)/κ`.
pub fn fix_distance(rep: &UnitaryRep, phi: &AlgebraElement, xi: &CVector, q: &[Element], kappa: Option<f64>) -> Result<FixDistance> {
    if !phi.is_probability(1e-9) {
        return Err(Error::Precondition("φ must be a probability density".into()));
    }
    require_in_sort(rep, phi, xi)?;
    let p = invariant_projection(rep);
    let nearest = &p * xi;
    let distance = (xi - &nearest).norm();
    let membership_residual = sort_distance(&rep.genuine_operator(phi)?, &nearest).distance;
    let invariance_residual = displacement_over(rep, &rep.group().generators(), &nearest);
    let delta_q = displacement_over(rep, q, xi);
    let (bound, notice) = match kappa {
        Some(k) if k > 0.0 => (Some(delta_q / k), None),
        _ => (None, Some("κ undefined; bound check skipped".to_string())),
    };
    Ok(FixDistance { distance, nearest: to_pairs(&nearest), membership_residual, invariance_residual, delta_q, bound, notice })
}

/// A point of `S_φ`: `π(φ)ζ` for `‖ζ‖ ≤ 1`.
pub fn sort_point(rep: &UnitaryRep, phi: &AlgebraElement, zeta: &CVector) -> Result<CVector> {
    let mut z = zeta.clone();
    crate::linalg::clamp_to_ball(&mut z);
    Ok(rep.genuine_operator(phi)? * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::linalg::{random_ball_vector, random_unitary};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn reynolds(rep: &UnitaryRep) -> CMatrix {
        let g = rep.group();
        let mut p = CMatrix::zeros(rep.dim(), rep.dim());
        for x in g.elements() {
            p += rep.unitary(x);
        }
        p / c(g.order() as f64, 0.0)
    }

    #[test]
    fn invariant_projection_examples() {
        for n in [2, 5, 9] {
            let z = Group::cyclic(n).unwrap();
            let rep = UnitaryRep::regular(&z).unwrap();
            let p = invariant_projection(&rep);
            assert!((&p - reynolds(&rep)).norm() < 1e-10, "{p} {}", reynolds(&rep));
            assert_relative_eq!(p.trace().re, 1.0, epsilon = 1e-10);
        }
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::permutation(&s3).unwrap().direct_sum(&UnitaryRep::regular(&s3).unwrap()).unwrap();
        assert!((invariant_projection(&rep) - reynolds(&rep)).norm() < 1e-10);
        assert_eq!(invariant_projection(&UnitaryRep::trivial(&s3, 3)), identity(3));
        let z7 = Group::cyclic(7).unwrap();
        assert_eq!(invariant_projection(&UnitaryRep::character(&z7, 2).unwrap()).norm(), 0.0);
    }

    fn char_oracle(n: usize) -> f64 {
        (1..n)
            .map(|k| (c(0.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64).exp() - c(1.0, 0.0)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cyclic_constants() {
        for n in 3..=12 {
            let z = Group::cyclic(n).unwrap();
            let rep = UnitaryRep::regular(&z).unwrap();
            let r = kazhdan_constant(&rep, &[z.element(1).unwrap()], &KazhdanOptions { starts: 8, seed: 1 }).unwrap();
            assert!((r.kappa - char_oracle(n)).abs() <= 1e-8, "n={n}: {} vs {}", r.kappa, char_oracle(n));
            assert!(r.sandwich_holds(1e-9));
        }
        assert_relative_eq!(char_oracle(3), 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(char_oracle(4), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trivial_rep_is_undefined() {
        let s3 = Group::symmetric3();
        let r = kazhdan_constant(&UnitaryRep::trivial(&s3, 2), &s3.generators(), &KazhdanOptions::default());
        assert!(matches!(r, Err(Error::Undefined)));
    }

    fn s3_report(seed: u64) -> (UnitaryRep, Vec<Element>, KazhdanReport) {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let q = s3.generators();
        let r = kazhdan_constant(&rep, &q, &KazhdanOptions { starts: 64, seed }).unwrap();
        (rep, q, r)
    }

    /// Brute force over the real unit sphere `S^4` of the 5-dimensional
    /// moving subspace (real forms, so real and complex minima agree), refined
    /// by zooming the angular mesh.
    fn mesh_minimum(forms: &[CMatrix]) -> f64 {
        assert!(forms.iter().all(|a| a.nrows() == 5 && a.iter().all(|z| z.im.abs() < 1e-12)));
        let real: Vec<nalgebra::DMatrix<f64>> = forms.iter().map(|a| a.map(|z| z.re)).collect();
        let f = |t: [f64; 4]| {
            let (s0, s1, s2) = (t[0].sin(), t[0].sin() * t[1].sin(), t[0].sin() * t[1].sin() * t[2].sin());
            let y = nalgebra::DVector::from_vec(vec![t[0].cos(), s0 * t[1].cos(), s1 * t[2].cos(), s2 * t[3].cos(), s2 * t[3].sin()]);
            real.iter().map(|a| y.dot(&(a * &y))).fold(f64::NEG_INFINITY, f64::max)
        };
        let pi = std::f64::consts::PI;
        let n = 24;
        let mut best = ([0.0; 4], f64::INFINITY);
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    for l in 0..2 * n {
                        let t = [i, j, k, l].map(|x| pi * x as f64 / n as f64);
                        let v = f(t);
                        if v < best.1 {
                            best = (t, v);
                        }
                    }
                }
            }
        }
        let mut h = pi / n as f64;
        for _ in 0..40 {
            let center = best.0;
            for i in -3..=3 {
                for j in -3..=3 {
                    for k in -3..=3 {
                        for l in -3..=3 {
                            let d = [i, j, k, l];
                            let t: [f64; 4] = std::array::from_fn(|q| center[q] + h * d[q] as f64 / 3.0);
                            let v = f(t);
                            if v < best.1 {
                                best = (t, v);
                            }
                        }
                    }
                }
            }
            h *= 0.7;
        }
        best.1
    }

    #[test]
    fn s3_matches_mesh_and_sandwich() {
        let (rep, q, r) = s3_report(0);
        assert!(r.sandwich_holds(1e-9));
        assert_relative_eq!(r.lambda_min, 3.0, epsilon = 1e-9);
        assert_relative_eq!(r.kappa * r.kappa, 12.0 / 7.0, epsilon = 1e-8);
        assert!((r.kappa - r.dual).abs() < 1e-8);
        assert_eq!(moving_basis(&rep).ncols(), 5);
        // real orthonormal basis of the complement of the constants
        let ones = nalgebra::DVector::from_element(6, 1.0 / 6f64.sqrt());
        let proj = nalgebra::DMatrix::identity(6, 6) - &ones * ones.transpose();
        let (vals, vecs) = crate::linalg::symmetric_eigen_real(&proj);
        let cols: Vec<CVector> = (0..6).filter(|&i| vals[i] > 0.5).map(|i| vecs.column(i).map(|x| c(x, 0.0))).collect();
        let block = restricted_forms(&rep, &q, &CMatrix::from_columns(&cols));
        let mesh = mesh_minimum(&block);
        assert!((mesh.max(0.0).sqrt() - r.kappa).abs() <= 1e-4, "mesh {} vs {}", mesh.sqrt(), r.kappa);
        let w = crate::linalg::from_pairs(&r.witness);
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-9);
        assert!((invariant_projection(&rep) * &w).norm() < 1e-9);
        assert!((displacement_over(&rep, &q, &w) - r.kappa).abs() < 1e-9);
    }

    #[test]
    fn conjugation_invariance() {
        let (rep, q, r) = s3_report(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let w = random_unitary(6, &mut rng);
            let conj = rep.conjugate(&w).unwrap();
            let r2 = kazhdan_constant(&conj, &q, &KazhdanOptions { starts: 16, seed: 5 }).unwrap();
            assert!((r.kappa - r2.kappa).abs() <= 1e-9);
        }
    }

    #[test]
    fn finite_groups_have_positive_constants() {
        for g in [Group::cyclic(5).unwrap(), Group::symmetric3(), Group::dihedral(4).unwrap()] {
            let rep = UnitaryRep::regular(&g).unwrap();
            let r = kazhdan_constant(&rep, &g.generators(), &KazhdanOptions { starts: 16, seed: 0 }).unwrap();
            assert!(r.kappa > 0.1 && r.sandwich_holds(1e-9), "{r:?}");
        }
    }

    #[test]
    fn covers_on_discrete_kinds() {
        let s3 = Group::symmetric3();
        let phi = AlgebraElement::dirac(&s3, s3.identity());
        let k: Vec<Element> = s3.elements().collect();
        for m in 0..4 {
            let level = build_cover(&phi, &k, m).unwrap();
            assert_eq!(level.neighborhood, vec![s3.identity()]);
            assert_eq!(level.cover, k);
        }
        // ρ_φ ≡ 0 for the uniform density, so one translate covers everything
        let level = build_cover(&AlgebraElement::uniform(&s3), &k, 0).unwrap();
        assert_eq!(level.cover.len(), 1);
    }

    #[test]
    fn circle_covers_grow_and_factor() {
        let t = Group::circle(256).unwrap();
        let phi = AlgebraElement::from_density_fn(&t, |g| c(1.0 + 0.5 * t.angle(g).cos(), 0.0));
        let k: Vec<Element> = t.elements().collect();
        let fam = CoverFamily::build(&phi, &k, CoverFamily::default_level(&phi)).unwrap();
        let sizes: Vec<usize> = fam.levels.iter().map(|l| l.cover.len()).collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]) && sizes[0] < *sizes.last().unwrap(), "{sizes:?}");
        for l in &fam.levels {
            assert_eq!(l.factorizations.len(), k.len());
            for f in &l.factorizations {
                assert_eq!(t.mul(f.g, f.h).unwrap(), f.k);
                assert!(l.contains(f.h) && l.cover.contains(&f.g));
            }
        }
        // a sharp bump is uncoverable at fine levels
        let sharp = AlgebraElement::normalized_indicator(&t, &[t.identity()]);
        assert!(matches!(build_cover(&sharp, &k, 3), Err(Error::UncoverableAtResolution(_))));
    }

    fn s3_limit() -> u32 {
        Group::symmetric3().resolution_limit()
    }

    fn s3_family() -> (UnitaryRep, CoverFamily) {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let phi = AlgebraElement::from_density_fn(&s3, |g| c(if g.index() < 3 { 0.25 } else { 1.0 / 12.0 }, 0.0));
        let fam = CoverFamily::build(&phi, &s3.generators(), CoverFamily::default_level(&phi)).unwrap();
        (rep, fam)
    }

    #[test]
    fn phi_examples() {
        let (rep, fam) = s3_family();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = invariant_projection(&rep);
        let inv = sort_point(&rep, &fam.phi, &(&p * random_ball_vector(6, &mut rng))).unwrap();
        assert!(phi_predicate(&rep, &fam, &inv, 6).unwrap().value <= 1e-15);
        for _ in 0..50 {
            let xi = sort_point(&rep, &fam.phi, &random_ball_vector(6, &mut rng)).unwrap();
            let v = phi_predicate(&rep, &fam, &xi, 6).unwrap();
            assert!(v.upper - v.value <= 0.5f64.powi(6) * xi.norm() + 1e-15);
            let top = phi_predicate(&rep, &fam, &xi, fam.top()).unwrap();
            // exhaustive over every level up to the resolution limit
            let direct = (0..=s3_limit())
                .map(|m| 0.5f64.powi(m as i32) * alpha(&rep, &build_cover(&fam.phi, &fam.k, m).unwrap(), &xi))
                .fold(0.0, f64::max);
            assert_eq!(top.value, direct);
            assert!(v.value <= direct && direct <= v.upper);
            // 2-Lipschitz
            let other = sort_point(&rep, &fam.phi, &random_ball_vector(6, &mut rng)).unwrap();
            let w = phi_predicate(&rep, &fam, &other, 6).unwrap();
            assert!((v.value - w.value).abs() <= 2.0 * (&xi - &other).norm() + 1e-12);
            // zero set is Fix_φ for a generating K
            assert_eq!(v.value <= 1e-15, (&xi - &p * &xi).norm() < 1e-12);
        }
        let outside = CVector::from_element(6, c(1.0, 0.0));
        assert!(matches!(phi_predicate(&rep, &fam, &outside, 6), Err(Error::Precondition(_))));
    }

    #[test]
    fn forward_estimate() {
        let (rep, fam) = s3_family();
        let p = invariant_projection(&rep);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inv = sort_point(&rep, &fam.phi, &(&p * random_ball_vector(6, &mut rng))).unwrap();
        for m in 0..=5 {
            let f = theorem42_forward(&rep, &fam, &inv, m).unwrap();
            assert!((f.slack - 0.5f64.powi(m as i32)).abs() <= 1e-15);
        }
        let mut applicable = 0;
        for _ in 0..300 {
            let z = &p * random_ball_vector(6, &mut rng) * c(0.9, 0.0) + random_ball_vector(6, &mut rng) * c(1e-6, 0.0);
            let xi = sort_point(&rep, &fam.phi, &z).unwrap();
            let m = rng.random_range(0..=5);
            match theorem42_forward(&rep, &fam, &xi, m) {
                Ok(f) => {
                    applicable += 1;
                    assert!(f.holds);
                    assert!((f.slack - 0.5f64.powi(m as i32)).abs() < 1e-4);
                }
                Err(Error::NotApplicable(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(applicable > 250);
        let far = sort_point(&rep, &fam.phi, &CVector::from_fn(6, |i, _| c(if i == 1 { 1.0 } else { 0.0 }, 0.0))).unwrap();
        assert!(matches!(theorem42_forward(&rep, &fam, &far, 3), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn fix_distance_examples() {
        let z3 = Group::cyclic(3).unwrap();
        let rep = UnitaryRep::regular(&z3).unwrap();
        let phi = AlgebraElement::uniform(&z3);
        let q = [z3.element(1).unwrap()];
        let kappa = 3f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        // a density that is not uniform, so S_φ is not just the constants
        let psi = AlgebraElement::from_density_fn(&z3, |g| c([0.5, 0.3, 0.2][g.index()], 0.0));
        for _ in 0..1000 {
            let xi = sort_point(&rep, &psi, &random_ball_vector(3, &mut rng)).unwrap();
            let f = fix_distance(&rep, &psi, &xi, &q, Some(kappa)).unwrap();
            assert!(!f.bound_violated(1e-12));
            assert!(f.membership_residual <= 1e-10);
            assert!(f.invariance_residual <= 1e-12);
        }
        let inv = sort_point(&rep, &phi, &random_ball_vector(3, &mut rng)).unwrap();
        let f = fix_distance(&rep, &phi, &inv, &q, Some(kappa)).unwrap();
        assert!(f.distance < 1e-12);
        let f = fix_distance(&rep, &phi, &inv, &q, None).unwrap();
        assert!(f.bound.is_none() && f.notice.is_some());
    }
}
