//! Numerical audit of the axioms of `T^A` on a built structure.
//!
//! Universal axioms are checked on seeded random points of each sort plus the
//! extreme point along the top singular direction. The three sup–inf axioms
//! are maximized by multistart projected ascent with the exact inner solver.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sort::Ellipsoid;
use super::MetricStructure;
use crate::error::Result;
use crate::linalg::{c, to_pairs, CMatrix, CVector};
use crate::optimize::{maximize, AscentOptions, Evaluation};

pub const AXIOMS: [&str; 12] = [
    "Conv", "Sym", "Lin1", "Lin2", "Norm", "Pos", "Pi1", "Pi2", "Complex", "BallImg", "DenseImg", "HausDist",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditBudget {
    /// Random points per sort (or per tuple draw) for universal axioms.
    pub samples: usize,
    /// Random starts per sup–inf instance.
    pub starts: usize,
    pub seed: u64,
    /// Longest tuple used by (Pos), (Pi1) and (BallImg); at most 3.
    pub tuple_len: usize,
    /// Random tuples of length ≥ 2 per axiom.
    pub tuples: usize,
    pub max_iter: usize,
}

impl Default for AuditBudget {
    fn default() -> Self {
        AuditBudget { samples: 16, starts: 32, seed: 0, tuple_len: 3, tuples: 8, max_iter: 200 }
    }
}

impl AuditBudget {
    fn ascent(&self, salt: u64) -> AscentOptions {
        AscentOptions {
            starts: self.starts,
            seed: self.seed.wrapping_add(salt.wrapping_mul(0x2545_F491_4F6C_DD1D)),
            max_iter: self.max_iter,
            tol: 1e-13,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomResidual {
    pub residual: f64,
    /// Points (as `[re, im]` pairs) at which the residual was attained; for
    /// sup–inf axioms these are the unit-ball parameters of the outer variables.
    pub witness: Vec<Vec<[f64; 2]>>,
    /// Sorts involved in the worst instance.
    pub instance: Vec<String>,
    pub starts: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxiomResidualReport {
    pub axioms: BTreeMap<String, AxiomResidual>,
}

impl AxiomResidualReport {
    pub fn residual(&self, axiom: &str) -> f64 {
        self.axioms.get(axiom).map(|a| a.residual).unwrap_or(f64::NAN)
    }

    pub fn max_residual(&self) -> f64 {
        self.axioms.values().map(|a| a.residual).fold(0.0, f64::max)
    }
}

/// Running maximum for one axiom.
#[derive(Default)]
struct Worst {
    value: f64,
    witness: Vec<CVector>,
    instance: Vec<String>,
}

impl Worst {
    fn offer(&mut self, value: f64, witness: &[&CVector], instance: &[&str]) {
        if value > self.value || (self.instance.is_empty() && value >= self.value) {
            self.value = value.max(0.0);
            self.witness = witness.iter().map(|v| (*v).clone()).collect();
            self.instance = instance.iter().map(|s| s.to_string()).collect();
        }
    }

    fn finish(self, starts: usize, seed: u64) -> AxiomResidual {
        AxiomResidual {
            residual: self.value,
            witness: self.witness.iter().map(to_pairs).collect(),
            instance: self.instance,
            starts,
            seed,
        }
    }
}

fn avg(x: &CVector, y: &CVector) -> CVector {
    (x + y) * c(0.5, 0.0)
}

fn times_i(x: &CVector) -> CVector {
    x * c(0.0, 1.0)
}

/// The sup–inf axiom instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom")]
pub enum SupInfInstance {
    BallImg { a: usize, bs: Vec<usize> },
    DenseImg { a: usize, b: usize },
    HausDist { a: usize, b: usize },
}

struct Prepared<'a> {
    m: &'a MetricStructure,
    inst: SupInfInstance,
    /// DenseImg: the set `π_a S_b`.
    inner: Option<Ellipsoid>,
    /// HausDist: `‖a − b‖₁`.
    gap: f64,
}

impl<'a> Prepared<'a> {
    fn new(m: &'a MetricStructure, inst: SupInfInstance) -> Result<Self> {
        let (inner, gap) = match &inst {
            SupInfInstance::DenseImg { a, b } => {
                let op: CMatrix = &m.sorts[*a].pi * m.sorts[*b].set.operator();
                (Some(Ellipsoid::new(op)), 0.0)
            }
            SupInfInstance::HausDist { a, b } => (None, m.sorts[*a].element.distance(&m.sorts[*b].element)?),
            SupInfInstance::BallImg { .. } => (None, 0.0),
        };
        Ok(Prepared { m, inst, inner, gap })
    }

    fn dims(&self) -> Vec<usize> {
        let n = |i: usize| self.m.sorts[i].set.domain_dim();
        match &self.inst {
            SupInfInstance::BallImg { bs, .. } => bs.iter().map(|&b| n(b)).collect(),
            SupInfInstance::DenseImg { a, b } => vec![n(self.m.product(*a, *b).expect("prepared"))],
            SupInfInstance::HausDist { a, .. } => vec![n(*a)],
        }
    }

    fn names(&self) -> Vec<String> {
        let n = |i: usize| self.m.sorts[i].name.clone();
        match &self.inst {
            SupInfInstance::BallImg { a, bs } => std::iter::once(n(*a)).chain(bs.iter().map(|&b| n(b))).collect(),
            SupInfInstance::DenseImg { a, b } | SupInfInstance::HausDist { a, b } => vec![n(*a), n(*b)],
        }
    }

    /// Initial points along the top singular directions.
    fn extra_starts(&self) -> Vec<Vec<CVector>> {
        let tops: Vec<CVector> = match &self.inst {
            SupInfInstance::BallImg { bs, .. } => bs.iter().map(|&b| self.m.sorts[b].set.top_direction()).collect(),
            SupInfInstance::DenseImg { a, b } => {
                vec![self.m.sorts[self.m.product(*a, *b).expect("prepared")].set.top_direction()]
            }
            SupInfInstance::HausDist { a, .. } => vec![self.m.sorts[*a].set.top_direction()],
        };
        let neg: Vec<CVector> = tops.iter().map(|v| -v).collect();
        vec![tops, neg]
    }

    /// Objective (violation amount) and its gradient.
    fn eval(&self, z: &[CVector]) -> Evaluation {
        let m = self.m;
        match &self.inst {
            SupInfInstance::BallImg { a, bs } => {
                let sa = &m.sorts[*a];
                let mut x = CVector::zeros(m.ambient_dim());
                for (zi, &b) in z.iter().zip(bs) {
                    x += m.sorts[b].set.operator() * zi;
                }
                let y = &sa.pi * &x;
                let p = sa.set.project(&y);
                let xn = x.norm();
                let value = p.distance - (xn - 1.0).abs() * sa.bound;
                let mut dir = if p.distance > 0.0 {
                    sa.pi.adjoint() * (&y - &p.nearest) / c(p.distance, 0.0)
                } else {
                    CVector::zeros(x.len())
                };
                if xn > 0.0 {
                    dir -= &x * c((xn - 1.0).signum() * sa.bound / xn, 0.0);
                }
                let grad = bs.iter().map(|&b| m.sorts[b].set.operator().adjoint() * &dir).collect();
                (value, Some(grad))
            }
            SupInfInstance::DenseImg { a, b } => {
                let outer = &m.sorts[m.product(*a, *b).expect("prepared")].set;
                distance_objective(outer.operator(), self.inner.as_ref().expect("prepared"), &z[0], 0.0)
            }
            SupInfInstance::HausDist { a, b } => {
                distance_objective(m.sorts[*a].set.operator(), &m.sorts[*b].set, &z[0], self.gap)
            }
        }
    }
}

/// `d(Bz, S) − offset` with gradient; inside `S` the gradient pushes `Bz`
/// outwards so that starts in the interior can still move.
fn distance_objective(outer: &CMatrix, inner: &Ellipsoid, z: &CVector, offset: f64) -> Evaluation {
    let x = outer * z;
    let p = inner.project(&x);
    let grad = if p.distance > 0.0 {
        outer.adjoint() * (&x - &p.nearest) / c(p.distance, 0.0)
    } else {
        outer.adjoint() * &x * c(1e-3, 0.0)
    };
    (p.distance - offset, Some(vec![grad]))
}

/// Value of a sup–inf search: the supremum found and where.
#[derive(Clone, Debug)]
pub struct SupInfValue {
    pub value: f64,
    /// Unit-ball parameters of the outer variables.
    pub point: Vec<CVector>,
    /// Outer points in the ambient space.
    pub outer: Vec<CVector>,
    pub instance: SupInfInstance,
}

fn run_sup_inf(m: &MetricStructure, inst: SupInfInstance, opts: &AscentOptions) -> Result<SupInfValue> {
    let prep = Prepared::new(m, inst)?;
    let r = maximize(&prep.dims(), opts, &prep.extra_starts(), |z| prep.eval(z));
    let outer = outer_points(m, &prep.inst, &r.point);
    Ok(SupInfValue { value: r.value, point: r.point, outer, instance: prep.inst })
}

fn outer_points(m: &MetricStructure, inst: &SupInfInstance, z: &[CVector]) -> Vec<CVector> {
    match inst {
        SupInfInstance::BallImg { bs, .. } => {
            bs.iter().zip(z).map(|(&b, zi)| m.sorts[b].set.operator() * zi).collect()
        }
        SupInfInstance::DenseImg { a, b } => {
            vec![m.sorts[m.product(*a, *b).expect("prepared")].set.operator() * &z[0]]
        }
        SupInfInstance::HausDist { a, .. } => vec![m.sorts[*a].set.operator() * &z[0]],
    }
}

/// Recomputes a sup–inf objective at stored unit-ball parameters.
pub fn recompute_sup_inf(m: &MetricStructure, inst: &SupInfInstance, z: &[CVector]) -> Result<f64> {
    Ok(Prepared::new(m, inst.clone())?.eval(z).0)
}

/// `sup_{ξ∈S_a} inf_{ζ∈S_b} ‖ζ − ξ‖`.
pub fn one_sided_hausdorff(m: &MetricStructure, a: &str, b: &str, opts: &AscentOptions) -> Result<SupInfValue> {
    let inst = SupInfInstance::HausDist { a: m.index(a)?, b: m.index(b)? };
    let mut r = run_sup_inf(m, inst, &AscentOptions { ..*opts })?;
    // the objective carries the offset ‖a − b‖₁; report the bare distance
    r.value += m.sorts[m.index(a)?].element.distance(&m.sorts[m.index(b)?].element)?;
    Ok(r)
}

pub fn audit_axioms(m: &MetricStructure, budget: &AuditBudget) -> Result<AxiomResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let ns = m.sorts.len();
    // seeded points per sort: the extreme point first, then random ones
    let points: Vec<Vec<CVector>> = (0..ns)
        .map(|i| {
            let set = &m.sorts[i].set;
            let mut v = vec![set.point(&set.top_direction())];
            v.extend((0..budget.samples).map(|_| set.sample(&mut rng)));
            v
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng, i: usize| -> CVector { points[i][rng.random_range(0..points[i].len())].clone() };

    let mut report = BTreeMap::new();
    let mut put = |name: &str, w: Worst, starts: usize| {
        report.insert(name.to_string(), w.finish(starts, budget.seed));
    };

    // (Conv) convex, symmetric, contains 0, radius ≤ ‖a‖
    let mut conv = Worst::default();
    let mut sym_neg = Worst::default();
    for (i, s) in m.sorts.iter().enumerate() {
        let zero = CVector::zeros(m.ambient_dim());
        conv.offer(s.set.radius() - s.bound, &[&s.set.point(&s.set.top_direction())], &[&s.name]);
        conv.offer(s.distance(&zero), &[&zero], &[&s.name]);
        for p in &points[i] {
            let q = pick(&mut rng, i);
            conv.offer(s.distance(&avg(p, &q)), &[p, &q], &[&s.name]);
            conv.offer(p.norm() - s.bound, &[p], &[&s.name]);
            sym_neg.offer(s.distance(&-p), &[p], &[&s.name]);
        }
    }
    if sym_neg.value > conv.value {
        conv = sym_neg;
    }
    put("Conv", conv, 0);

    // (Sym), (Lin1), (Lin2), (Norm) over pairs of sorts
    let (mut sym, mut lin1, mut lin2, mut norm) = (Worst::default(), Worst::default(), Worst::default(), Worst::default());
    for (i, own) in points.iter().enumerate() {
        for j in 0..ns {
            let (a, b) = (&m.sorts[i].name, &m.sorts[j].name);
            for _ in 0..budget.samples.max(1).div_ceil(4) {
                let (x, y, y2) = (pick(&mut rng, i), pick(&mut rng, j), pick(&mut rng, j));
                sym.offer((m.predicate(&x, &y) - m.predicate(&y, &x)).abs(), &[&x, &y], &[a, b]);
                let lhs = m.predicate(&x, &avg(&y, &y2));
                let rhs = 0.5 * (m.predicate(&x, &y) + m.predicate(&x, &y2));
                lin1.offer((lhs - rhs).abs(), &[&x, &y, &y2], &[a, b, b]);
                lin2.offer(m.predicate(&x, &CVector::zeros(x.len())).abs(), &[&x], &[a]);
            }
        }
        for x in own {
            norm.offer((m.predicate(x, x) - x.norm_squared()).abs(), &[x], &[&m.sorts[i].name]);
        }
    }
    put("Sym", sym, 0);
    put("Lin1", lin1, 0);
    put("Lin2", lin2, 0);
    put("Norm", norm, 0);

    // (Pos) and (Pi1) on tuples of length ≤ tuple_len
    let (mut pos, mut pi1) = (Worst::default(), Worst::default());
    let base = m.base();
    let tuple_len = budget.tuple_len.clamp(1, 3);
    let draws = ns * budget.samples.max(1) + budget.tuples;
    for k in 0..draws {
        let n = 1 + k % tuple_len;
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..ns)).collect();
        let xs: Vec<CVector> = idx.iter().map(|&i| pick(&mut rng, i)).collect();
        let names: Vec<&str> = idx.iter().map(|&i| m.sorts[i].name.as_str()).collect();
        let refs: Vec<&CVector> = xs.iter().collect();
        let gram: f64 = xs.iter().flat_map(|x| xs.iter().map(move |y| (x, y))).map(|(x, y)| m.predicate(x, y)).sum();
        pos.offer(-gram, &refs, &names);
        let a = base[rng.random_range(0..base.len())];
        let sa = &m.sorts[a];
        let image: CVector = xs.iter().fold(CVector::zeros(m.ambient_dim()), |acc, x| acc + &sa.pi * x);
        let mut inst = vec![sa.name.as_str()];
        inst.extend(&names);
        pi1.offer(image.norm() - sa.bound * gram.max(0.0).sqrt(), &refs, &inst);
    }
    put("Pos", pos, 0);
    put("Pi1", pi1, 0);

    // (Pi2) linearity, composition and adjoint identities on sort points
    let mut pi2 = Worst::default();
    for t in m.linear_triples() {
        for &d in base {
            for p in &points[d] {
                let lhs = &m.sorts[t.c].pi * p;
                let rhs = &m.sorts[t.a].pi * p * t.alpha + &m.sorts[t.b].pi * p;
                let names = [&m.sorts[t.c].name[..], &m.sorts[t.a].name, &m.sorts[t.b].name, &m.sorts[d].name];
                pi2.offer((lhs - rhs).norm(), &[p], &names);
            }
        }
    }
    for &a in base {
        for &b in base {
            let ab = m.product(a, b)?;
            let d = base[rng.random_range(0..base.len())];
            let p = pick(&mut rng, d);
            let lhs = &m.sorts[a].pi * (&m.sorts[b].pi * &p);
            let rhs = &m.sorts[ab].pi * &p;
            pi2.offer((lhs - rhs).norm(), &[&p], &[&m.sorts[a].name, &m.sorts[b].name, &m.sorts[d].name]);
        }
        let Some(astar) = m.star_of(a) else { continue };
        for _ in 0..budget.samples.max(1) {
            let (i, j) = (rng.random_range(0..ns), rng.random_range(0..ns));
            let (x, y) = (pick(&mut rng, i), pick(&mut rng, j));
            let lhs = m.predicate(&(&m.sorts[a].pi * &x), &y);
            let rhs = m.predicate(&x, &(&m.sorts[astar].pi * &y));
            pi2.offer((lhs - rhs).abs(), &[&x, &y], &[&m.sorts[a].name, &m.sorts[i].name, &m.sorts[j].name]);
        }
    }
    put("Pi2", pi2, 0);

    // (Complex) i maps each sort into itself and respects the other symbols
    let mut cx = Worst::default();
    for (i, s) in m.sorts.iter().enumerate() {
        for p in &points[i] {
            let q = pick(&mut rng, i);
            let ip = times_i(p);
            let checks = [
                s.distance(&ip),
                (ip.norm() - p.norm()).abs(),
                (times_i(&ip) + p).norm(),
                (m.predicate(&ip, &times_i(&q)) - m.predicate(p, &q)).abs(),
                (times_i(&avg(p, &q)) - avg(&ip, &times_i(&q))).norm(),
                (times_i(&-p) + &ip).norm(),
            ];
            for v in checks {
                cx.offer(v, &[p, &q], &[&s.name]);
            }
            let a = base[rng.random_range(0..base.len())];
            let commute = (&m.sorts[a].pi * &ip - times_i(&(&m.sorts[a].pi * p))).norm();
            cx.offer(commute, &[p], &[&m.sorts[a].name, &s.name]);
        }
    }
    put("Complex", cx, 0);

    // sup–inf axioms
    let mut instances: Vec<(&str, SupInfInstance)> = Vec::new();
    for &a in base {
        for &b in base {
            instances.push(("BallImg", SupInfInstance::BallImg { a, bs: vec![b] }));
            instances.push(("DenseImg", SupInfInstance::DenseImg { a, b }));
            instances.push(("HausDist", SupInfInstance::HausDist { a, b }));
        }
    }
    for k in 0..budget.tuples {
        if tuple_len < 2 {
            break;
        }
        let n = 2 + k % (tuple_len - 1);
        let a = base[rng.random_range(0..base.len())];
        let bs = (0..n).map(|_| base[rng.random_range(0..base.len())]).collect();
        instances.push(("BallImg", SupInfInstance::BallImg { a, bs }));
    }
    let results: Vec<Result<SupInfValue>> = instances
        .par_iter()
        .enumerate()
        .map(|(k, (_, inst))| run_sup_inf(m, inst.clone(), &budget.ascent(k as u64)))
        .collect();
    for axiom in ["BallImg", "DenseImg", "HausDist"] {
        let mut w = Worst::default();
        for ((name, _), r) in instances.iter().zip(&results) {
            if *name != axiom {
                continue;
            }
            let r = r.as_ref().map_err(Clone::clone)?;
            let prep_names = Prepared::new(m, r.instance.clone())?.names();
            let refs: Vec<&CVector> = r.point.iter().collect();
            let names: Vec<&str> = prep_names.iter().map(String::as_str).collect();
            w.offer(r.value, &refs, &names);
        }
        put(axiom, w, budget.starts);
    }
    Ok(AxiomResidualReport { axioms: report })
}

/// Helper for callers that need the instance descriptor of a stored witness.
pub fn instance_for(m: &MetricStructure, axiom: &str, names: &[String]) -> Result<SupInfInstance> {
    let idx = |k: usize| m.index(&names[k]);
    Ok(match axiom {
        "BallImg" => SupInfInstance::BallImg { a: idx(0)?, bs: (1..names.len()).map(idx).collect::<Result<_>>()? },
        "DenseImg" => SupInfInstance::DenseImg { a: idx(0)?, b: idx(1)? },
        _ => SupInfInstance::HausDist { a: idx(0)?, b: idx(1)? },
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::s3_structure;
    use super::*;
    use crate::linalg::from_pairs;

    #[test]
    fn genuine_structure_passes() {
        let m = s3_structure();
        let report = audit_axioms(&m, &AuditBudget::default()).unwrap();
        assert_eq!(report.axioms.len(), 12);
        for (name, r) in &report.axioms {
            assert!(r.residual <= 1e-8, "{name}: {}", r.residual);
        }
        assert_eq!(report.residual("Sym"), 0.0);
        assert_eq!(report.residual("Lin2"), 0.0);
    }

    #[test]
    fn inflated_sort_is_flagged() {
        let mut m = s3_structure();
        m.inflate_sort("t", 1.5).unwrap();
        let report = audit_axioms(&m, &AuditBudget::default()).unwrap();
        assert!(report.residual("Conv").max(report.residual("BallImg")) >= 0.1);
    }

    #[test]
    fn witnesses_reproduce_residuals() {
        let mut m = s3_structure();
        m.inflate_sort("r.phi", 1.3).unwrap();
        let report = audit_axioms(&m, &AuditBudget { starts: 8, ..Default::default() }).unwrap();
        for axiom in ["BallImg", "DenseImg", "HausDist"] {
            let r = &report.axioms[axiom];
            let inst = instance_for(&m, axiom, &r.instance).unwrap();
            let z: Vec<CVector> = r.witness.iter().map(|w| from_pairs(w)).collect();
            let v = recompute_sup_inf(&m, &inst, &z).unwrap().max(0.0);
            assert!((v - r.residual).abs() <= 1e-12, "{axiom}: {v} vs {}", r.residual);
        }
        assert!(report.residual("DenseImg") > 0.01);
    }

    #[test]
    fn hausdorff_between_sorts() {
        let m = s3_structure();
        let opts = AscentOptions { starts: 16, seed: 3, ..Default::default() };
        let h = one_sided_hausdorff(&m, "t", "r", &opts).unwrap();
        // δ_t and δ_r are unitaries: every point of the ball is in both sorts
        assert!(h.value.abs() < 1e-12);
        let h = one_sided_hausdorff(&m, "phi", "t.phi", &opts).unwrap();
        let gap = m.sort("phi").unwrap().element.distance(&m.sort("t.phi").unwrap().element).unwrap();
        assert!(h.value <= gap + 1e-12);
    }

    #[test]
    fn audit_is_reproducible() {
        let m = s3_structure();
        let b = AuditBudget { starts: 4, samples: 4, ..Default::default() };
        assert_eq!(audit_axioms(&m, &b).unwrap(), audit_axioms(&m, &b).unwrap());
    }
}
