//! Sequences of representations observed along a finite index schedule.
//!
//! Limits along the ultrafilter are replaced by a limit oracle that only
//! answers for convergent data: it extrapolates tails that follow a power law
//! or a quadratic in `1/i`, accepts tails that have settled, and reports
//! non-convergence otherwise.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{approx_identity, AlgebraElement};
use crate::error::{Error, Result};
use crate::group::{Element, Group, GroupKind};
use crate::linalg::{c, random_unit_vector, CMatrix, CVector, C64};
use crate::representation::{lemma22_check, UnitaryRep};

/// Largest level examined on discrete kinds, where every level is identical.
const DISCRETE_LEVELS: u32 = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<usize>);

impl Default for Schedule {
    fn default() -> Self {
        Schedule((1..=8).collect())
    }
}

impl Schedule {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Limit of `values` sampled at the schedule indices.
pub fn ultralimit(schedule: &Schedule, values: &[f64], tol: f64) -> Result<f64> {
    let xs: Vec<f64> = schedule.indices().iter().map(|&i| i as f64).collect();
    limit_along(&xs, values, tol)
}

/// Limit of `ys` as `xs → ∞`: the last value once the tail has settled to
/// `tol`, otherwise the limit of a power law `L + c x^{-p}` fitted to the last
/// three points and confirmed on the fourth-last.
pub fn limit_along(xs: &[f64], ys: &[f64], tol: f64) -> Result<f64> {
    fitted_limit(xs, ys, tol, 0.1)
}

/// As [`limit_along`], accepting a fourth-last point within `confirm` of the
/// fitted model, relative to its distance from the limit.
fn fitted_limit(xs: &[f64], ys: &[f64], tol: f64, confirm: f64) -> Result<f64> {
    let n = ys.len();
    if n != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: n });
    }
    if n < 3 {
        return Err(Error::NonConvergent("need at least three values".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonConvergent("non-finite value".into()));
    }
    let (y1, y2, y3) = (ys[n - 3], ys[n - 2], ys[n - 1]);
    if y1 == y2 && y2 == y3 {
        return Ok(y3);
    }
    let confirmed = |limit: f64, model: &dyn Fn(f64) -> f64, rel: f64| -> bool {
        n < 4 || {
            let (x0, y0) = (xs[n - 4], ys[n - 4]);
            (model(x0) - y0).abs() <= tol.max(rel * (y0 - limit).abs())
        }
    };
    if (y1 - y2) * (y2 - y3) > 0.0 {
        if let Some((limit, coef, p)) = power_tail(&xs[n - 3..], &ys[n - 3..]) {
            if confirmed(limit, &|x| limit + coef * x.powf(-p), confirm) {
                return Ok(limit);
            }
        }
    }
    // norms of vectors affine in 1/x have squares quadratic in 1/x
    let [u1, u2, u3] = [1.0 / xs[n - 3], 1.0 / xs[n - 2], 1.0 / xs[n - 1]];
    let quad = |u: f64| {
        y1 * (u - u2) * (u - u3) / ((u1 - u2) * (u1 - u3))
            + y2 * (u - u1) * (u - u3) / ((u2 - u1) * (u2 - u3))
            + y3 * (u - u1) * (u - u2) / ((u3 - u1) * (u3 - u2))
    };
    let limit = quad(0.0);
    if confirmed(limit, &|x| quad(1.0 / x), 0.0) {
        return Ok(limit);
    }
    if (y3 - y2).abs() <= tol && ((y2 - y1).abs() <= tol || (y1 - y2) * (y2 - y3) <= 0.0) {
        return Ok(y3);
    }
    Err(Error::NonConvergent(format!("tail {y1:.3e}, {y2:.3e}, {y3:.3e} fits no convergence model")))
}

/// `L + c x^{-p}` through three points with decreasing differences.
fn power_tail(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let (d1, d2) = (ys[0] - ys[1], ys[1] - ys[2]);
    if d2.abs() >= d1.abs() {
        return None;
    }
    let [x1, x2, x3] = [xs[0], xs[1], xs[2]];
    let shape = |p: f64| (x1.powf(-p) - x2.powf(-p)) / (x2.powf(-p) - x3.powf(-p));
    let target = d1 / d2;
    let (mut lo, mut hi) = (0.05f64, 8.0f64);
    if !(shape(lo) <= target && target <= shape(hi)) {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if shape(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let coef = d2 / (x2.powf(-p) - x3.powf(-p));
    Some((ys[2] - coef * x3.powf(-p), coef, p))
}

/// Character frequency as a function of the sequence index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum FrequencyRule {
    Constant { k: i64 },
    Linear { slope: i64, offset: i64 },
    /// `scale · base^i`, reduced modulo the group order.
    Geometric { base: i64, scale: i64 },
    /// `min(scale · base^i, N/2)`: growth stops at the highest frequency.
    Saturating { base: i64, scale: i64 },
}

impl FrequencyRule {
    pub fn frequency(&self, i: usize, order: usize) -> i64 {
        let n = order as i64;
        let pow = |base: i64, scale: i64| -> i128 { scale as i128 * (base as i128).pow(i.min(60) as u32) };
        match *self {
            FrequencyRule::Constant { k } => k,
            FrequencyRule::Linear { slope, offset } => slope * i as i64 + offset,
            FrequencyRule::Geometric { base, scale } => pow(base, scale).rem_euclid(n as i128) as i64,
            FrequencyRule::Saturating { base, scale } => pow(base, scale).min((n / 2) as i128) as i64,
        }
    }
}

/// How the members of a sequence are generated.
#[derive(Clone, Debug)]
pub enum SequenceRule {
    Explicit(Vec<UnitaryRep>),
    Constant(UnitaryRep),
    Character(FrequencyRule),
    /// `U_i(g) = U(g)(1 + 1/i) / |1 + 1/i|`.
    Renormalized(UnitaryRep),
}

#[derive(Clone, Debug)]
pub struct RepSequence {
    group: Arc<Group>,
    schedule: Schedule,
    reps: Vec<UnitaryRep>,
}

impl RepSequence {
    pub fn new(group: &Arc<Group>, schedule: Schedule, rule: SequenceRule) -> Result<Self> {
        if schedule.is_empty() {
            return Err(Error::Precondition("empty schedule".into()));
        }
        let reps = match rule {
            SequenceRule::Explicit(v) => {
                if v.len() != schedule.len() {
                    return Err(Error::DimensionMismatch { expected: schedule.len(), got: v.len() });
                }
                v
            }
            SequenceRule::Constant(r) => vec![r; schedule.len()],
            SequenceRule::Character(f) => schedule
                .indices()
                .iter()
                .map(|&i| UnitaryRep::character(group, f.frequency(i, group.order())))
                .collect::<Result<_>>()?,
            SequenceRule::Renormalized(r) => {
                let mats: Vec<CMatrix> = group.elements().map(|g| r.unitary(g)).collect();
                schedule
                    .indices()
                    .iter()
                    .map(|&i| {
                        let s = 1.0 + 1.0 / i as f64;
                        let scaled = mats.iter().map(|m| m * c(s, 0.0) / c(s.abs(), 0.0)).collect();
                        UnitaryRep::explicit(group, scaled)
                    })
                    .collect::<Result<_>>()?
            }
        };
        if reps.iter().any(|r| r.group() != group) {
            return Err(Error::GroupMismatch);
        }
        let d = reps.last().map(|r| r.dim()).unwrap_or(0);
        if reps.iter().rev().take(3).any(|r| r.dim() != d) {
            return Err(Error::Precondition("dimension does not stabilize".into()));
        }
        Ok(RepSequence { group: group.clone(), schedule, reps })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn reps(&self) -> &[UnitaryRep] {
        &self.reps
    }

    /// Eventual dimension.
    pub fn dim(&self) -> usize {
        self.reps.last().map(|r| r.dim()).unwrap_or(0)
    }
}

/// Records that `ξ_i = π_i(φ) ζ_i`.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub phi: AlgebraElement,
    pub zetas: Vec<CVector>,
}

#[derive(Clone, Debug)]
pub struct VectorSequence {
    reps: RepSequence,
    vectors: Vec<CVector>,
    provenance: Option<Provenance>,
}

impl VectorSequence {
    pub fn new(reps: RepSequence, vectors: Vec<CVector>) -> Result<Self> {
        if vectors.len() != reps.schedule.len() {
            return Err(Error::DimensionMismatch { expected: reps.schedule.len(), got: vectors.len() });
        }
        for (v, r) in vectors.iter().zip(&reps.reps) {
            if v.len() != r.dim() {
                return Err(Error::DimensionMismatch { expected: r.dim(), got: v.len() });
            }
        }
        Ok(VectorSequence { reps, vectors, provenance: None })
    }

    /// The sequence `ξ_i = π_i(φ) ζ_i`.
    pub fn from_operator(reps: RepSequence, phi: &AlgebraElement, zetas: Vec<CVector>) -> Result<Self> {
        let vectors = reps
            .reps
            .iter()
            .zip(&zetas)
            .map(|(r, z)| Ok(r.genuine_operator(phi)? * z))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self::new(reps, vectors)?;
        s.provenance = Some(Provenance { phi: phi.clone(), zetas });
        Ok(s)
    }

    pub fn reps(&self) -> &RepSequence {
        &self.reps
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// Uniform norm bound `sup_i ‖ξ_i‖`.
    pub fn bound(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Holds,
    Fails,
    Inconclusive,
}

/// Semi-norm `‖ζ‖ ρ_φ` dominating every orbit map of the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormWitness {
    /// `sup_i ‖ζ_i‖`.
    pub scale: f64,
    /// `min_{i,g} (scale · ρ_φ(g) − ‖π_i(g)ξ_i − ξ_i‖)`; nonnegative when dominated.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub continuous: Flag,
    pub equicontinuous: Flag,
    pub nondegenerate: Flag,
    pub levels: Vec<u32>,
    pub continuity_curve: Vec<f64>,
    pub equicontinuity_curve: Vec<f64>,
    pub nondegeneracy_curve: Vec<f64>,
    pub witness: Option<SeminormWitness>,
    /// Flag-chain violations repaired on output (equicontinuous or
    /// non-degenerate without continuous).
    pub chain_violations: usize,
}

impl ClassificationReport {
    /// Evidence curves as CSV rows `level,continuous,equicontinuous,nondegenerate`.
    pub fn curves_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["level", "continuous", "equicontinuous", "nondegenerate"]).map_err(io)?;
        for (k, m) in self.levels.iter().enumerate() {
            w.serialize((m, self.continuity_curve[k], self.equicontinuity_curve[k], self.nondegeneracy_curve[k]))
                .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Csv(e.to_string()))?).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn flags(&self) -> [Flag; 3] {
        [self.continuous, self.equicontinuous, self.nondegenerate]
    }
}

/// Levels examined for a group: all of `0..=M_res`, capped on discrete kinds.
pub fn classification_levels(group: &Group) -> Vec<u32> {
    let top = if group.is_discrete() { DISCRETE_LEVELS } else { group.resolution_limit() };
    (0..=top).collect()
}

fn flag_for(levels: &[u32], curve: &[f64], tol: f64) -> Flag {
    let n = curve.len();
    let last = curve[n - 1];
    if last <= tol {
        return Flag::Holds;
    }
    if n < 2 || last >= curve[n - 2] * (1.0 - 1e-9) {
        return Flag::Fails;
    }
    let xs: Vec<f64> = levels.iter().map(|&m| 2f64.powi(m as i32)).collect();
    // only the side of tol matters here, so the model check is loose
    match fitted_limit(&xs, curve, tol, 0.5) {
        Ok(l) if l <= tol => Flag::Holds,
        Ok(_) => Flag::Fails,
        Err(_) => Flag::Inconclusive,
    }
}

/// Continuity, equicontinuity and non-degeneracy tests for `[ξ_i]`.
pub fn classify_vector(v: &VectorSequence, tol: f64) -> Result<ClassificationReport> {
    let rs = &v.reps;
    let g = &rs.group;
    let levels = classification_levels(g);
    let displacement = |gx: Element| -> Vec<f64> {
        rs.reps.iter().zip(&v.vectors).map(|(r, x)| r.displacement(gx, x)).collect()
    };
    let mut c_curve = Vec::with_capacity(levels.len());
    let mut ec_curve = Vec::with_capacity(levels.len());
    let mut nd_curve = Vec::with_capacity(levels.len());
    for &m in &levels {
        let mut c_val: f64 = 0.0;
        let mut ec_val: f64 = 0.0;
        for gx in g.neighborhood(m)? {
            let d = displacement(gx);
            let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
            c_val = c_val.max(ultralimit(&rs.schedule, &sq, tol * tol)?.max(0.0).sqrt());
            ec_val = ec_val.max(d.iter().copied().fold(0.0, f64::max));
        }
        let e = approx_identity(g, m)?;
        let nd: Vec<f64> = rs
            .reps
            .iter()
            .zip(&v.vectors)
            .map(|(r, x)| Ok((r.genuine_operator(&e)? * x - x).norm_squared()))
            .collect::<Result<_>>()?;
        c_curve.push(c_val);
        ec_curve.push(ec_val);
        nd_curve.push(ultralimit(&rs.schedule, &nd, tol * tol)?.max(0.0).sqrt());
    }
    let mut continuous = flag_for(&levels, &c_curve, tol);
    let equicontinuous = flag_for(&levels, &ec_curve, tol);
    let nondegenerate = flag_for(&levels, &nd_curve, tol);
    let mut chain_violations = 0;
    for f in [equicontinuous, nondegenerate] {
        if f == Flag::Holds && continuous != Flag::Holds {
            chain_violations += 1;
            continuous = Flag::Holds;
        }
    }
    let witness = match &v.provenance {
        Some(p) => Some(seminorm_witness(v, p)?),
        None => None,
    };
    Ok(ClassificationReport {
        continuous,
        equicontinuous,
        nondegenerate,
        levels,
        continuity_curve: c_curve,
        equicontinuity_curve: ec_curve,
        nondegeneracy_curve: nd_curve,
        witness,
        chain_violations,
    })
}

fn seminorm_witness(v: &VectorSequence, p: &Provenance) -> Result<SeminormWitness> {
    let g = &v.reps.group;
    let scale = p.zetas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut slack = f64::INFINITY;
    for x in g.elements() {
        let rho = p.phi.rho(x)?;
        for (r, xi) in v.reps.reps.iter().zip(&v.vectors) {
            slack = slack.min(scale * rho - r.displacement(x, xi));
        }
    }
    Ok(SeminormWitness { scale, slack })
}

/// One cell of a partition of unity.
#[derive(Clone, Debug)]
pub struct Piece {
    pub phi: AlgebraElement,
    pub center: Element,
    pub cell: Vec<Element>,
}

/// Splits `φ` into pieces with disjoint supports, each inside a translate
/// `g_m {ρ < ε}`. A single piece is returned when one translate suffices.
pub fn partition_of_unity<R>(phi: &AlgebraElement, eps: f64, rho: R) -> Result<Vec<Piece>>
where
    R: Fn(Element) -> f64,
{
    let g = phi.group();
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let small: Vec<bool> = g.elements().map(|x| rho(x) < eps).collect();
    if !small[g.identity().index()] {
        return Err(Error::Precondition("ρ(e) must vanish".into()));
    }
    if !g.is_discrete() && small.iter().filter(|&&b| b).count() == 1 {
        return Err(Error::ResolutionExceeded { level: 0, limit: g.resolution_limit() });
    }
    let in_translate = |center: Element, x: Element| -> Result<bool> {
        Ok(small[g.mul(g.inverse(center), x)?.index()])
    };
    let support = phi.support();
    for center in g.elements() {
        let mut all = true;
        for &x in &support {
            if !in_translate(center, x)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(vec![Piece { phi: phi.clone(), center, cell: support }]);
        }
    }
    let mut unassigned = support;
    let mut pieces = Vec::new();
    while let Some(&first) = unassigned.first() {
        // among translates containing the first unassigned point, take the one
        // covering the most unassigned points (lowest index on ties)
        let mut best: Option<(Element, usize)> = None;
        for center in g.elements() {
            if !in_translate(center, first)? {
                continue;
            }
            let mut count = 0;
            for &x in &unassigned {
                if in_translate(center, x)? {
                    count += 1;
                }
            }
            if best.map(|b| count > b.1).unwrap_or(true) {
                best = Some((center, count));
            }
        }
        let (center, _) = best.expect("the first point lies in its own translate");
        let mut cell = Vec::new();
        let mut rest = Vec::new();
        for &x in &unassigned {
            if in_translate(center, x)? {
                cell.push(x);
            } else {
                rest.push(x);
            }
        }
        pieces.push(Piece { phi: phi.restrict(&cell), center, cell });
        unassigned = rest;
    }
    Ok(pieces)
}

/// Both sides of `‖π(φ)ξ − Σ (∫φ_m) g_m ξ‖ ≤ ε‖φ‖₁`, and the smallest
/// slack of the averaging bound applied to each nonnegative piece.
#[derive(Clone, Debug)]
pub struct PartitionBound {
    pub lhs: f64,
    pub rhs: f64,
    pub min_lemma_slack: Option<f64>,
}

pub fn partition_bound(rep: &UnitaryRep, phi: &AlgebraElement, pieces: &[Piece], xi: &CVector, eps: f64) -> Result<PartitionBound> {
    let g = rep.group();
    let mut approx = CVector::zeros(rep.dim());
    let mut min_slack: Option<f64> = None;
    for p in pieces {
        approx += rep.apply(p.center, xi) * p.phi.total_mass();
        let positive = p.phi.density().iter().all(|z| z.im == 0.0 && z.re >= 0.0) && p.phi.atoms().is_empty();
        let mass = p.phi.total_mass().re;
        if positive && mass > 0.0 {
            // translate the normalized piece back to the identity
            let mu = p.phi.translate(g.inverse(p.center), g.identity())?.scale(c(1.0 / mass, 0.0));
            let s = lemma22_check(rep, &mu, xi, eps)?;
            min_slack = Some(min_slack.map_or(s, |m: f64| m.min(s)));
        }
    }
    let lhs = (rep.genuine_operator(phi)? * xi - approx).norm();
    Ok(PartitionBound { lhs, rhs: eps * phi.norm1(), min_lemma_slack: min_slack })
}

/// Entrywise ultralimit of the members, validated as a representation.
pub fn naive_ultraproduct(rs: &RepSequence, tol: f64) -> Result<UnitaryRep> {
    let d = rs.dim();
    let start = rs.reps.iter().position(|r| r.dim() == d).unwrap_or(0);
    let xs: Vec<f64> = rs.schedule.indices()[start..].iter().map(|&i| i as f64).collect();
    let mut mats = Vec::with_capacity(rs.group.order());
    for gx in rs.group.elements() {
        let us: Vec<CMatrix> = rs.reps[start..].iter().map(|r| r.unitary(gx)).collect();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re: Vec<f64> = us.iter().map(|u| u[(i, j)].re).collect();
                let im: Vec<f64> = us.iter().map(|u| u[(i, j)].im).collect();
                let lim = |v: &[f64]| {
                    limit_along(&xs, v, tol).map_err(|e| {
                        Error::NonConvergent(format!("entry ({i},{j}) of U({}): {e}", rs.group.label(gx)))
                    })
                };
                m[(i, j)] = C64::new(lim(&re)?, lim(&im)?);
            }
        }
        mats.push(m);
    }
    UnitaryRep::explicit(&rs.group, mats)
}

/// Family of a corpus sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFamily {
    /// `ξ_i = π_i(φ) ζ_i` with `‖ζ_i‖ ≤ 1`.
    Smoothed,
    /// Unit vectors of characters whose frequency grows to the top of the band.
    GrowingCharacter,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub family: CorpusFamily,
    pub sequence: VectorSequence,
}

fn bump(group: &Arc<Group>, center: f64, power: i32) -> AlgebraElement {
    let raw = AlgebraElement::from_density_fn(group, |g| c(((1.0 + (group.angle(g) - center).cos()) / 2.0).powi(power), 0.0));
    let mass = raw.norm1();
    raw.scale(c(1.0 / mass, 0.0))
}

/// Twenty sequences on the discretized circle with 256 points: ten smoothed
/// by a bump and ten growing characters.
pub fn classification_corpus(seed: u64) -> Result<Vec<CorpusEntry>> {
    let t = Group::circle(256)?;
    let schedule = Schedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(20);
    for k in 0..10 {
        let phi = bump(&t, rng.random_range(-3.0..3.0), 1 + (k % 3));
        let (reps, d) = if k < 7 {
            let mut rep = UnitaryRep::character(&t, 0)?;
            for _ in 0..(1 + k % 3) {
                rep = rep.direct_sum(&UnitaryRep::character(&t, rng.random_range(-2..=2))?)?;
            }
            let d = rep.dim();
            let w = crate::linalg::random_unitary(d, &mut rng);
            (RepSequence::new(&t, schedule.clone(), SequenceRule::Constant(rep.conjugate(&w)?))?, d)
        } else {
            let rule = FrequencyRule::Saturating { base: 2, scale: k as i64 - 6 };
            (RepSequence::new(&t, schedule.clone(), SequenceRule::Character(rule))?, 1)
        };
        let zeta = random_unit_vector(d, &mut rng);
        let eta = random_unit_vector(d, &mut rng);
        let zetas = schedule
            .indices()
            .iter()
            .map(|&i| (&zeta + &eta * c(1.0 / i as f64, 0.0)) * c(0.5, 0.0))
            .collect();
        out.push(CorpusEntry {
            name: format!("smoothed-{k}"),
            family: CorpusFamily::Smoothed,
            sequence: VectorSequence::from_operator(reps, &phi, zetas)?,
        });
    }
    for k in 0..10 {
        let rule = FrequencyRule::Saturating { base: 2 + (k / 5) as i64, scale: 1 + (k % 5) as i64 };
        let reps = RepSequence::new(&t, schedule.clone(), SequenceRule::Character(rule))?;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let vectors = vec![CVector::from_element(1, C64::from_polar(1.0, phase)); schedule.len()];
        out.push(CorpusEntry {
            name: format!("growing-{k}"),
            family: CorpusFamily::GrowingCharacter,
            sequence: VectorSequence::new(reps, vectors)?,
        });
    }
    Ok(out)
}

/// A sequence whose continuity test holds while equicontinuity does not.
#[derive(Clone, Debug, Serialize)]
pub struct Q36Candidate {
    pub trial: usize,
    pub frequencies: Vec<i64>,
    pub report: ClassificationReport,
}

/// Randomized search for sequences separating the continuous part from the
/// equicontinuous one. Reports candidates only; classification at finite
/// resolution cannot certify a separation.
pub fn search_q36(group: &Arc<Group>, trials: usize, seed: u64, tol: f64) -> Result<Vec<Q36Candidate>> {
    if !matches!(group.kind(), GroupKind::CircleDiscretized { .. } | GroupKind::Cyclic { .. }) {
        return Err(Error::Unsupported("the search uses characters of cyclic or circle groups".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = Schedule::default();
    let mut out = Vec::new();
    for trial in 0..trials {
        let rule = match rng.random_range(0..3) {
            0 => FrequencyRule::Constant { k: rng.random_range(-3..=3) },
            1 => FrequencyRule::Linear { slope: rng.random_range(0..=4), offset: rng.random_range(-2..=2) },
            _ => FrequencyRule::Saturating { base: 2, scale: rng.random_range(1..=4) },
        };
        let rs = RepSequence::new(group, schedule.clone(), SequenceRule::Character(rule.clone()))?;
        let frequencies: Vec<i64> = schedule.indices().iter().map(|&i| rule.frequency(i, group.order())).collect();
        let damp = rng.random_range(0.0..1.0);
        let vectors = schedule
            .indices()
            .iter()
            .map(|&i| random_unit_vector(1, &mut rng) * c(1.0 / (1.0 + damp * i as f64), 0.0))
            .collect();
        let vs = VectorSequence::new(rs, vectors)?;
        match classify_vector(&vs, tol) {
            Ok(report) if report.continuous == Flag::Holds && report.equicontinuous != Flag::Holds => {
                out.push(Q36Candidate { trial, frequencies, report })
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_gaussian_vector;

    #[test]
    fn ultralimit_examples() {
        let s = Schedule::default();
        assert_eq!(ultralimit(&s, &[0.7; 8], 1e-9).unwrap(), 0.7);
        let inv: Vec<f64> = s.indices().iter().map(|&i| 1.0 / i as f64).collect();
        assert!(ultralimit(&s, &inv, 1e-6).unwrap().abs() < 1e-6);
        let alt: Vec<f64> = s.indices().iter().map(|&i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(matches!(ultralimit(&s, &alt, 1e-3), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn geometric_tail_is_extrapolated() {
        let s = Schedule::default();
        let v: Vec<f64> = s.indices().iter().map(|&i| 3.0 + 2.0 / (i as f64).powi(2)).collect();
        assert!((ultralimit(&s, &v, 1e-9).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_in_a_fixed_rep() {
        let t = Group::circle(64).unwrap();
        let rep = UnitaryRep::character(&t, 1).unwrap().direct_sum(&UnitaryRep::trivial(&t, 1)).unwrap();
        let rs = RepSequence::new(&t, Schedule::default(), SequenceRule::Constant(rep)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi = random_unit_vector(2, &mut rng);
        let phi = AlgebraElement::from_density_fn(&t, |g| c(1.0 + t.angle(g).cos(), 0.0));
        let vs = VectorSequence::from_operator(rs, &phi, vec![xi; 8]).unwrap();
        let r = classify_vector(&vs, 1e-3).unwrap();
        assert_eq!(r.flags(), [Flag::Holds; 3], "{r:?}");
        assert!(r.witness.unwrap().slack >= -1e-12);
        assert_eq!(r.chain_violations, 0);
    }

    #[test]
    fn discrete_sequences_are_continuous() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let rs = RepSequence::new(&s3, Schedule::default(), SequenceRule::Constant(rep)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vs = VectorSequence::new(rs, (0..8).map(|_| random_unit_vector(6, &mut rng)).collect()).unwrap();
        assert_eq!(classify_vector(&vs, 1e-3).unwrap().flags(), [Flag::Holds; 3]);
    }

    #[test]
    fn growing_characters_fail() {
        let t = Group::circle(256).unwrap();
        let rule = FrequencyRule::Saturating { base: 2, scale: 1 };
        let rs = RepSequence::new(&t, Schedule::default(), SequenceRule::Character(rule)).unwrap();
        let vs = VectorSequence::new(rs, vec![CVector::from_element(1, c(1.0, 0.0)); 8]).unwrap();
        let r = classify_vector(&vs, 1e-3).unwrap();
        assert_eq!(r.equicontinuous, Flag::Fails);
        assert_eq!(r.nondegenerate, Flag::Fails);
        assert_eq!(r.continuous, Flag::Fails);
        assert!(r.equicontinuity_curve.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(r.nondegeneracy_curve.iter().all(|&v| (0.79..=4.0 / 3.0 + 1e-12).contains(&v)));
        let csv = r.curves_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + r.levels.len());
    }

    #[test]
    fn corpus_criteria_agree() {
        for e in (0..8).flat_map(|s| classification_corpus(s).unwrap()) {
            let r = classify_vector(&e.sequence, 1e-3).unwrap();
            let want = match e.family {
                CorpusFamily::Smoothed => Flag::Holds,
                CorpusFamily::GrowingCharacter => Flag::Fails,
            };
            assert_eq!(r.flags(), [want; 3], "{}: {:?}", e.name, r);
            assert_eq!(r.chain_violations, 0, "{}: {:?}", e.name, r);
            if e.family == CorpusFamily::Smoothed {
                assert!(r.witness.unwrap().slack >= -1e-12, "{}", e.name);
            }
        }
    }

    #[test]
    fn partition_examples() {
        let t = Group::circle(64).unwrap();
        let half: Vec<Element> = (0..32).map(|k| t.element(k).unwrap()).collect();
        let phi = AlgebraElement::normalized_indicator(&t, &half);
        let rho = |g: Element| t.angle(g).abs();
        let pieces = partition_of_unity(&phi, std::f64::consts::FRAC_PI_4, rho).unwrap();
        assert!((2..=3).contains(&pieces.len()), "{}", pieces.len());
        let mut sum = AlgebraElement::zero(&t);
        for p in &pieces {
            sum = sum.add(&p.phi).unwrap();
            for &x in &p.cell {
                assert!(rho(t.mul(t.inverse(p.center), x).unwrap()) < std::f64::consts::FRAC_PI_4);
            }
        }
        assert_eq!(sum.distance(&phi).unwrap(), 0.0);
        let total: f64 = pieces.iter().map(|p| p.phi.norm1()).sum();
        assert!((total - phi.norm1()).abs() < 1e-15);
        // one translate suffices for a narrow bump
        let bump = AlgebraElement::normalized_indicator(&t, &half[10..14]);
        assert_eq!(partition_of_unity(&bump, 0.5, rho).unwrap().len(), 1);
        // nothing but the identity is small at this ε
        assert!(matches!(partition_of_unity(&phi, 0.01, rho), Err(Error::ResolutionExceeded { .. })));
    }

    #[test]
    fn partition_bound_holds() {
        let t = Group::circle(64).unwrap();
        let rep = UnitaryRep::character(&t, 1).unwrap().direct_sum(&UnitaryRep::character(&t, -3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xi = random_gaussian_vector(2, &mut rng);
        let phi = AlgebraElement::from_density_fn(&t, |g| c((1.0 + t.angle(g).sin()).max(0.0), 0.0));
        let rho = |g: Element| rep.displacement(g, &xi);
        let eps = 0.8 * xi.norm();
        let pieces = partition_of_unity(&phi, eps, rho).unwrap();
        let b = partition_bound(&rep, &phi, &pieces, &xi, eps).unwrap();
        assert!(b.lhs <= b.rhs + 1e-12);
        assert!(b.min_lemma_slack.unwrap() >= -1e-12);
    }

    #[test]
    fn naive_ultraproduct_examples() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::standard(&s3).unwrap();
        let rs = RepSequence::new(&s3, Schedule::default(), SequenceRule::Constant(rep.clone())).unwrap();
        let lim = naive_ultraproduct(&rs, 1e-9).unwrap();
        for g in s3.elements() {
            assert!((lim.unitary(g) - rep.unitary(g)).norm() < 1e-12);
        }
        let rs = RepSequence::new(&s3, Schedule::default(), SequenceRule::Renormalized(rep.clone())).unwrap();
        let lim = naive_ultraproduct(&rs, 1e-9).unwrap();
        assert!((lim.unitary(s3.element(4).unwrap()) - rep.unitary(s3.element(4).unwrap())).norm() < 1e-12);
        let t = Group::circle(256).unwrap();
        let rule = FrequencyRule::Geometric { base: 2, scale: 1 };
        let rs = RepSequence::new(&t, Schedule::default(), SequenceRule::Character(rule)).unwrap();
        assert!(matches!(naive_ultraproduct(&rs, 1e-6), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn q36_search_reports_candidates_deterministically() {
        let t = Group::circle(64).unwrap();
        let a = search_q36(&t, 6, 3, 1e-3).unwrap();
        let b = search_q36(&t, 6, 3, 1e-3).unwrap();
        assert_eq!(a.len(), b.len());
        for c in &a {
            assert_eq!(c.report.continuous, Flag::Holds);
        }
    }
}
