//! The multi-sorted structure attached to a representation: one sort per
//! element of a finite sample set `A₀`, the real predicate `[ξ, ζ] = Re⟨ξ, ζ⟩`,
//! the maps `π_a: S_b → S_{ab}` and multiplication by `i`.

mod audit;
mod reconstruct;
mod sort;

pub use audit::{
    audit_axioms, instance_for, one_sided_hausdorff, recompute_sup_inf, AuditBudget, AxiomResidual,
    AxiomResidualReport, SupInfInstance, SupInfValue, AXIOMS,
};
pub use reconstruct::{reconstruct, Reconstruction};
pub use sort::{sort_distance, Ellipsoid, Projection, Sort};

use std::collections::BTreeMap;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::{c, real_inner, CVector, C64};
use crate::representation::UnitaryRep;

/// Elements closer than this in `‖·‖₁` share a sort.
const SAME_ELEMENT: f64 = 1e-12;

/// Indices `(a, b, c)` with `a_c = α a_a + a_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearTriple {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub alpha: C64,
}

#[derive(Clone, Debug)]
pub struct MetricStructure {
    rep: UnitaryRep,
    sorts: Vec<Sort>,
    names: BTreeMap<String, usize>,
    base: Vec<usize>,
    star: Vec<Option<usize>>,
    products: BTreeMap<(usize, usize), usize>,
    linear: Vec<LinearTriple>,
}

/// Image `π_a p` together with the sort it lands in.
#[derive(Clone, Debug)]
pub struct PiImage {
    pub point: CVector,
    pub sort: String,
    /// Distance from the image to its target sort.
    pub residual: f64,
}

fn star_name(n: &str) -> String {
    if n.contains(['+', '.']) {
        format!("({n})*")
    } else {
        format!("{n}*")
    }
}

fn product_name(a: &str, b: &str) -> String {
    let wrap = |n: &str| if n.contains('+') { format!("({n})") } else { n.to_string() };
    format!("{}.{}", wrap(a), wrap(b))
}

impl MetricStructure {
    /// Builds the structure on the generators, closing under the involution,
    /// adding the sum of the first two generators, and then adding every
    /// product of two base elements.
    pub fn build(rep: &UnitaryRep, generators: &[(String, AlgebraElement)]) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Precondition("a structure needs at least one generator".into()));
        }
        let mut s = MetricStructure {
            rep: rep.clone(),
            sorts: Vec::new(),
            names: BTreeMap::new(),
            base: Vec::new(),
            star: Vec::new(),
            products: BTreeMap::new(),
            linear: Vec::new(),
        };
        for (name, a) in generators {
            s.insert(name.clone(), a.clone())?;
        }
        if generators.len() >= 2 {
            let sum = generators[0].1.add(&generators[1].1)?;
            s.insert(format!("{}+{}", generators[0].0, generators[1].0), sum)?;
        }
        let firsts: Vec<usize> = (0..s.sorts.len()).collect();
        for i in firsts {
            let (name, inv) = (star_name(&s.sorts[i].name), s.sorts[i].element.involute());
            s.insert(name, inv)?;
        }
        s.base = (0..s.sorts.len()).collect();
        for &i in &s.base.clone() {
            for &j in &s.base.clone() {
                let name = product_name(&s.sorts[i].name, &s.sorts[j].name);
                let ab = s.sorts[i].element.convolve(&s.sorts[j].element)?;
                let k = s.insert(name, ab)?;
                s.products.insert((i, j), k);
            }
        }
        s.star = (0..s.sorts.len()).map(|i| s.find(&s.sorts[i].element.involute())).collect();
        for &i in &s.base {
            for &j in &s.base {
                for &k in &s.base {
                    if i == j {
                        continue;
                    }
                    let diff = s.sorts[k].element.sub(&s.sorts[i].element)?.sub(&s.sorts[j].element)?;
                    if diff.norm1() < SAME_ELEMENT {
                        s.linear.push(LinearTriple { a: i, b: j, c: k, alpha: c(1.0, 0.0) });
                    }
                }
            }
        }
        Ok(s)
    }

    fn find(&self, a: &AlgebraElement) -> Option<usize> {
        self.sorts
            .iter()
            .position(|s| s.element.distance(a).map(|d| d < SAME_ELEMENT).unwrap_or(false))
    }

    fn insert(&mut self, name: String, a: AlgebraElement) -> Result<usize> {
        if let Some(i) = self.find(&a) {
            self.names.entry(name).or_insert(i);
            return Ok(i);
        }
        let pi = self.rep.operator_of(&a)?;
        let i = self.sorts.len();
        self.sorts.push(Sort::new(name.clone(), a, pi));
        self.names.insert(name, i);
        Ok(i)
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    /// Indices of the generators, their sum and their adjoints.
    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn linear_triples(&self) -> &[LinearTriple] {
        &self.linear
    }

    pub fn star_of(&self, i: usize) -> Option<usize> {
        self.star[i]
    }

    pub fn ambient_dim(&self) -> usize {
        self.rep.ambient_dim()
    }

    /// Sort index for a name, including aliases of coinciding elements.
    pub fn index(&self, name: &str) -> Result<usize> {
        self.names.get(name).copied().ok_or_else(|| Error::MissingSort(name.to_string()))
    }

    pub fn sort(&self, name: &str) -> Result<&Sort> {
        Ok(&self.sorts[self.index(name)?])
    }

    /// All names, aliases included.
    pub fn names(&self) -> impl Iterator<Item = (&str, usize)> {
        self.names.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sort index of `ab`, if present.
    pub fn product(&self, a: usize, b: usize) -> Result<usize> {
        if let Some(&k) = self.products.get(&(a, b)) {
            return Ok(k);
        }
        let ab = self.sorts[a].element.convolve(&self.sorts[b].element)?;
        self.find(&ab)
            .ok_or_else(|| Error::MissingSort(product_name(&self.sorts[a].name, &self.sorts[b].name)))
    }

    /// `π_a p` for `p ∈ S_b`, certified against `S_{ab}`.
    pub fn apply_pi(&self, a: &str, b: &str, p: &CVector) -> Result<PiImage> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        let k = self.product(ia, ib)?;
        let point = &self.sorts[ia].pi * p;
        let residual = self.sorts[k].distance(&point);
        Ok(PiImage { point, sort: self.sorts[k].name.clone(), residual })
    }

    /// The predicate `[ξ, ζ]`.
    pub fn predicate(&self, x: &CVector, y: &CVector) -> f64 {
        real_inner(x, y)
    }

    /// Replaces the set of one sort by its image under `factor`, leaving the
    /// function symbols untouched. Used to build non-models.
    pub fn inflate_sort(&mut self, name: &str, factor: f64) -> Result<()> {
        let i = self.index(name)?;
        let scaled = &self.sorts[i].pi * c(factor, 0.0);
        self.sorts[i].set = Ellipsoid::new(scaled);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::linalg::random_ball_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn s3_structure() -> MetricStructure {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let t = AlgebraElement::dirac(&s3, s3.element_by_label("(1 2)").unwrap());
        let r = AlgebraElement::dirac(&s3, s3.element_by_label("(1 2 3)").unwrap());
        let phi = AlgebraElement::from_density_fn(&s3, |g| c(0.1 * (g.index() as f64 + 1.0), 0.05));
        MetricStructure::build(&rep, &[("t".into(), t), ("r".into(), r), ("phi".into(), phi)]).unwrap()
    }

    #[test]
    fn closure_properties() {
        let m = s3_structure();
        assert!(m.sorts().len() >= 8);
        // δ_t is self-adjoint, so `t*` aliases `t`
        assert_eq!(m.index("t*").unwrap(), m.index("t").unwrap());
        for &i in m.base() {
            assert!(m.star_of(i).is_some());
            for &j in m.base() {
                assert!(m.product(i, j).is_ok());
            }
        }
        assert!(!m.linear_triples().is_empty());
    }

    #[test]
    fn apply_pi_lands_in_product_sort() {
        let m = s3_structure();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = m.sort("phi").unwrap();
        for _ in 0..10 {
            let p = b.set.sample(&mut rng);
            let img = m.apply_pi("r", "phi", &p).unwrap();
            assert!(img.residual <= 1e-10);
            assert!(img.point.norm() <= m.sort("r").unwrap().bound * p.norm() + 1e-12);
        }
    }

    #[test]
    fn identity_acts_trivially() {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let e = AlgebraElement::dirac(&s3, s3.identity());
        let phi = AlgebraElement::uniform(&s3);
        let m = MetricStructure::build(&rep, &[("e".into(), e), ("u".into(), phi)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = m.sort("u").unwrap().pi.clone() * random_ball_vector(6, &mut rng);
        assert_eq!(m.apply_pi("e", "u", &p).unwrap().point, p);
    }

    #[test]
    fn missing_product_sort() {
        let m = s3_structure();
        let deep = m.index("phi.phi").unwrap();
        let other = m.index("r.phi").unwrap();
        assert!(matches!(m.product(deep, other), Err(Error::MissingSort(_))));
    }
}
