//! The measure algebra `M(G)` restricted to atoms plus densities.
//!
//! An element is a finite sum of Dirac masses together with a density `φ`
//! integrated against Haar weights. On discrete kinds a Dirac mass `δ_g` is
//! folded into the density as the value `1 / w(g)` at `g`, so the atomic part
//! is always empty there. On the discretized circle atoms are kept apart and
//! the total variation is the sum of both parts.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::linalg::{c, C64};

#[derive(Clone, Debug)]
pub struct AlgebraElement {
    group: Arc<Group>,
    atoms: BTreeMap<Element, C64>,
    density: Vec<C64>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.atoms == other.atoms && self.density == other.density
    }
}

impl AlgebraElement {
    pub fn zero(group: &Arc<Group>) -> Self {
        AlgebraElement {
            group: group.clone(),
            atoms: BTreeMap::new(),
            density: vec![C64::default(); group.order()],
        }
    }

    /// Element with the given density values, one per group element.
    pub fn from_density(group: &Arc<Group>, density: Vec<C64>) -> Result<Self> {
        if density.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), got: density.len() });
        }
        Ok(AlgebraElement { group: group.clone(), atoms: BTreeMap::new(), density })
    }

    pub fn from_density_fn<F: FnMut(Element) -> C64>(group: &Arc<Group>, f: F) -> Self {
        let density = group.elements().map(f).collect();
        AlgebraElement { group: group.clone(), atoms: BTreeMap::new(), density }
    }

    pub fn dirac(group: &Arc<Group>, g: Element) -> Self {
        let mut a = Self::zero(group);
        a.add_atom(g, c(1.0, 0.0));
        a
    }

    /// Adds `coeff · δ_g`, folding into the density on discrete kinds.
    pub fn add_atom(&mut self, g: Element, coeff: C64) {
        if self.group.is_discrete() {
            self.density[g.index()] += coeff / self.group.haar_weight(g);
        } else {
            let slot = self.atoms.entry(g).or_default();
            *slot += coeff;
            if *slot == C64::default() {
                self.atoms.remove(&g);
            }
        }
    }

    /// Haar probability density on the whole (finite) group.
    pub fn uniform(group: &Arc<Group>) -> Self {
        let all: Vec<Element> = group.elements().collect();
        Self::normalized_indicator(group, &all)
    }

    /// Positive density of norm one, constant on `set`.
    pub fn normalized_indicator(group: &Arc<Group>, set: &[Element]) -> Self {
        let mass: f64 = set.iter().map(|&g| group.haar_weight(g)).sum();
        let mut a = Self::zero(group);
        for &g in set {
            a.density[g.index()] = c(1.0 / mass, 0.0);
        }
        a
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn atoms(&self) -> &BTreeMap<Element, C64> {
        &self.atoms
    }

    pub fn density(&self) -> &[C64] {
        &self.density
    }

    pub fn density_at(&self, g: Element) -> C64 {
        self.density[g.index()]
    }

    /// Total variation `Σ|c_g| + Σ w(g)|φ(g)|`.
    pub fn norm1(&self) -> f64 {
        let atomic: f64 = self.atoms.values().map(|z| z.norm()).sum();
        let dens: f64 = self
            .density
            .iter()
            .zip(self.group.haar_weights())
            .map(|(z, w)| z.norm() * w)
            .sum();
        atomic + dens
    }

    /// `μ(G)`: the integral of the constant function 1.
    pub fn total_mass(&self) -> C64 {
        let atomic: C64 = self.atoms.values().sum();
        let dens: C64 = self
            .density
            .iter()
            .zip(self.group.haar_weights())
            .map(|(z, w)| z * w)
            .sum();
        atomic + dens
    }

    /// Total weight carried by each element: `c_g + w(g) φ(g)`, so that
    /// `π(a) = Σ_g coefficients[g] U(g)` for any representation.
    pub fn coefficients(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self
            .density
            .iter()
            .zip(self.group.haar_weights())
            .map(|(z, w)| z * w)
            .collect();
        for (g, z) in &self.atoms {
            out[g.index()] += z;
        }
        out
    }

    pub fn support(&self) -> Vec<Element> {
        let mut s: Vec<Element> = self
            .group
            .elements()
            .filter(|g| self.density[g.index()] != C64::default())
            .collect();
        for g in self.atoms.keys() {
            if !s.contains(g) {
                s.push(*g);
            }
        }
        s.sort();
        s
    }

    /// True for a positive measure of total mass one (up to `tol`).
    pub fn is_probability(&self, tol: f64) -> bool {
        let positive = self
            .atoms
            .values()
            .chain(self.density.iter())
            .all(|z| z.im.abs() <= tol && z.re >= -tol);
        positive && (self.norm1() - 1.0).abs() <= tol
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.group == other.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(c(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(c(-1.0, 0.0), other)
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: C64, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let mut out = self.clone();
        for (d, o) in out.density.iter_mut().zip(&other.density) {
            *d += alpha * o;
        }
        for (&g, &z) in &other.atoms {
            let slot = out.atoms.entry(g).or_default();
            *slot += alpha * z;
            if *slot == C64::default() {
                out.atoms.remove(&g);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        out.density.iter_mut().for_each(|d| *d *= alpha);
        out.atoms.values_mut().for_each(|z| *z *= alpha);
        out.atoms.retain(|_, z| *z != C64::default());
        out
    }

    /// `‖self − other‖₁`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm1())
    }

    /// Convolution product in `M(G)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let g = &self.group;
        let mut out = Self::zero(g);
        let nz = |v: &[C64]| -> Vec<(Element, C64)> {
            v.iter()
                .enumerate()
                .filter(|(_, z)| **z != C64::default())
                .map(|(i, z)| (Element::from_index(i), *z))
                .collect()
        };
        let left = nz(&self.density);
        let right = nz(&other.density);
        // density * density: (φ*ψ)(hk) += w(h) φ(h) ψ(k)
        for &(h, x) in &left {
            let wx = x * g.haar_weight(h);
            for &(k, y) in &right {
                out.density[g.mul(h, k)?.index()] += wx * y;
            }
        }
        // atom * density: (δ_h * ψ)(hk) = ψ(k)
        for (&h, &x) in &self.atoms {
            for &(k, y) in &right {
                out.density[g.mul(h, k)?.index()] += x * y;
            }
        }
        // density * atom: (φ * δ_k)(hk) = Δ(k⁻¹) φ(h)
        for (&k, &y) in &other.atoms {
            let dk = g.modular(g.inverse(k));
            for &(h, x) in &left {
                out.density[g.mul(h, k)?.index()] += x * y * dk;
            }
        }
        for (&h, &x) in &self.atoms {
            for (&k, &y) in &other.atoms {
                out.add_atom(g.mul(h, k)?, x * y);
            }
        }
        Ok(out)
    }

    /// The involution `φ*(g) = Δ(g⁻¹) conj φ(g⁻¹)`, `δ_g* = δ_{g⁻¹}`.
    pub fn involute(&self) -> Self {
        let g = &self.group;
        let mut out = Self::zero(g);
        for x in g.elements() {
            let xi = g.inverse(x);
            out.density[x.index()] = self.density[xi.index()].conj() * g.modular(xi);
        }
        for (&x, &z) in &self.atoms {
            out.atoms.insert(g.inverse(x), z.conj());
        }
        out
    }

    /// Two-sided translate `δ_f * self * δ_h`.
    pub fn translate(&self, f: Element, h: Element) -> Result<Self> {
        let g = &self.group;
        let mut out = Self::zero(g);
        let dh = g.modular(g.inverse(h));
        for k in g.elements() {
            let z = self.density[k.index()];
            if z != C64::default() {
                let target = g.mul(g.mul(f, k)?, h)?;
                out.density[target.index()] = z * dh;
            }
        }
        for (&k, &z) in &self.atoms {
            out.atoms.insert(g.mul(g.mul(f, k)?, h)?, z);
        }
        Ok(out)
    }

    /// Semi-norm `ρ(g) = ‖δ_g * self − self‖₁`.
    pub fn rho(&self, g: Element) -> Result<f64> {
        self.translate(g, self.group.identity())?.distance(self)
    }

    /// Restriction of the density and atoms to `set`.
    pub fn restrict(&self, set: &[Element]) -> Self {
        let mut out = Self::zero(&self.group);
        for &g in set {
            out.density[g.index()] = self.density[g.index()];
            if let Some(z) = self.atoms.get(&g) {
                out.atoms.insert(g, *z);
            }
        }
        out
    }

    /// Density as CSV rows `element,re,im`.
    pub fn to_csv(&self) -> Result<String> {
        if !self.atoms.is_empty() {
            return Err(Error::Csv("atomic part has no density representation".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["element", "re", "im"]).map_err(io)?;
        for (i, z) in self.density.iter().enumerate() {
            w.serialize((i, z.re, z.im)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Approximate identity `e_m`: `δ_e` on discrete kinds, the normalized
/// indicator of `U_m` on the circle.
pub fn approx_identity(group: &Arc<Group>, m: u32) -> Result<AlgebraElement> {
    let u = group.neighborhood(m)?;
    if group.is_discrete() {
        Ok(AlgebraElement::dirac(group, group.identity()))
    } else {
        Ok(AlgebraElement::normalized_indicator(group, &u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_element(g: &Arc<Group>, rng: &mut ChaCha8Rng) -> AlgebraElement {
        AlgebraElement::from_density_fn(g, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn indicator(g: &Arc<Group>, xs: &[usize]) -> AlgebraElement {
        AlgebraElement::from_density_fn(g, |e| if xs.contains(&e.index()) { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    // direct double sum over the enumeration, independent of `convolve`
    fn oracle_convolve(g: &Arc<Group>, a: &AlgebraElement, b: &AlgebraElement) -> Vec<C64> {
        g.elements()
            .map(|x| {
                g.elements()
                    .map(|h| {
                        let hinv_x = g.mul(g.inverse(h), x).unwrap();
                        a.density_at(h) * b.density_at(hinv_x) * g.haar_weight(h)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn z2_indicator_squares_to_identity() {
        let z2 = Group::cyclic(2).unwrap();
        let s = indicator(&z2, &[1]);
        let p = s.convolve(&s).unwrap();
        assert_eq!(p.density(), oracle_convolve(&z2, &s, &s).as_slice());
        assert_eq!(p.density(), &[c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn z3_shift_example() {
        let z3 = Group::cyclic(3).unwrap();
        let psi = indicator(&z3, &[1]);
        let phi = indicator(&z3, &[0, 1]);
        let p = psi.convolve(&phi).unwrap();
        assert_eq!(p.density(), oracle_convolve(&z3, &psi, &phi).as_slice());
        assert_eq!(p.density(), indicator(&z3, &[1, 2]).density());
    }

    #[test]
    fn dirac_identity_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in [Group::symmetric3(), Group::circle(32).unwrap(), Group::cyclic(5).unwrap()] {
            let phi = random_element(&g, &mut rng);
            let e = AlgebraElement::dirac(&g, g.identity());
            assert!(e.convolve(&phi).unwrap().distance(&phi).unwrap() < 1e-14);
            assert!(phi.convolve(&e).unwrap().distance(&phi).unwrap() < 1e-14);
        }
    }

    #[test]
    fn involution_examples() {
        let z3 = Group::cyclic(3).unwrap();
        let a = AlgebraElement::from_density(&z3, vec![c(1.0, 1.0), c(2.0, -1.0), c(0.5, 3.0)]).unwrap();
        let s = a.involute();
        assert_eq!(s.density(), &[c(1.0, -1.0), c(0.5, -3.0), c(2.0, 1.0)]);
        assert_eq!(s.involute(), a);
        let t = Group::circle(16).unwrap();
        let g = t.element(3).unwrap();
        let d = AlgebraElement::dirac(&t, g).involute();
        assert_eq!(d, AlgebraElement::dirac(&t, t.inverse(g)));
    }

    #[test]
    fn translate_examples() {
        let z4 = Group::cyclic(4).unwrap();
        let one = indicator(&z4, &[0]);
        let t = one.translate(z4.element(1).unwrap(), z4.element(0).unwrap()).unwrap();
        assert_eq!(t, indicator(&z4, &[1]));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s3 = Group::symmetric3();
        let phi = random_element(&s3, &mut rng);
        assert_eq!(phi.translate(s3.identity(), s3.identity()).unwrap(), phi);
        for f in s3.elements() {
            for h in s3.elements() {
                let t = phi.translate(f, h).unwrap();
                assert!((t.norm1() - phi.norm1()).abs() <= 1e-12);
                // agrees with convolving by Dirac masses
                let via = AlgebraElement::dirac(&s3, f)
                    .convolve(&phi)
                    .unwrap()
                    .convolve(&AlgebraElement::dirac(&s3, h))
                    .unwrap();
                assert!(via.distance(&t).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn rho_examples() {
        let z2 = Group::cyclic(2).unwrap();
        let e = indicator(&z2, &[0]);
        assert_eq!(e.rho(z2.identity()).unwrap(), 0.0);
        assert_eq!(e.rho(z2.element(1).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn rho_is_a_seminorm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d4 = Group::dihedral(4).unwrap();
        let phi = random_element(&d4, &mut rng);
        for g in d4.elements() {
            for f in d4.elements() {
                let lhs = phi.rho(d4.mul(d4.inverse(g), f).unwrap()).unwrap();
                assert!(lhs <= phi.rho(g).unwrap() + phi.rho(f).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn approximate_identity_on_circle() {
        let t = Group::circle(256).unwrap();
        let phi = AlgebraElement::from_density_fn(&t, |g| c(1.0 + t.angle(g).cos(), 0.0));
        let mut prev = f64::INFINITY;
        for m in 0..=t.resolution_limit() {
            let e = approx_identity(&t, m).unwrap();
            assert!((e.norm1() - 1.0).abs() < 1e-12);
            assert!(e.is_probability(1e-12));
            let err = e.convolve(&phi).unwrap().distance(&phi).unwrap();
            assert!(err < prev);
            prev = err;
        }
        // three-point average of 1 + cos: error h²/3 · (2/π) with h = 2π/256
        let h = 2.0 * PI / 256.0;
        assert!(prev <= 1e-3);
        assert!((prev - h * h / 3.0 * 2.0 / PI).abs() < 1e-5);
        assert!(approx_identity(&t, 7).is_err());
    }

    #[test]
    fn approximate_identity_on_discrete_is_unit() {
        let s3 = Group::symmetric3();
        let e = approx_identity(&s3, 3).unwrap();
        assert_eq!(e, AlgebraElement::dirac(&s3, s3.identity()));
        assert_eq!(e.norm1(), 1.0);
    }

    #[test]
    fn window_overflow_in_convolution() {
        let z = Group::integers(2).unwrap();
        let two = AlgebraElement::dirac(&z, z.element_by_label("2").unwrap());
        assert!(matches!(two.convolve(&two), Err(Error::WindowOverflow(4, 2))));
        let one = AlgebraElement::dirac(&z, z.element_by_label("1").unwrap());
        assert_eq!(one.convolve(&one).unwrap(), two);
    }

    #[test]
    fn group_mismatch_is_rejected() {
        let a = AlgebraElement::uniform(&Group::cyclic(3).unwrap());
        let b = AlgebraElement::uniform(&Group::cyclic(4).unwrap());
        assert_eq!(a.convolve(&b), Err(Error::GroupMismatch));
    }

    #[test]
    fn csv_export() {
        let z2 = Group::cyclic(2).unwrap();
        let csv = indicator(&z2, &[1]).to_csv().unwrap();
        assert_eq!(csv, "element,re,im\n0,0.0,0.0\n1,1.0,0.0\n");
    }

    #[test]
    fn circle_atoms_stay_separate() {
        let t = Group::circle(16).unwrap();
        let d = AlgebraElement::dirac(&t, t.element(2).unwrap());
        assert_eq!(d.atoms().len(), 1);
        assert_eq!(d.norm1(), 1.0);
        let u = AlgebraElement::uniform(&t);
        let p = d.convolve(&u).unwrap();
        assert!(p.atoms().is_empty());
        assert!((p.norm1() - 1.0).abs() < 1e-14);
    }
}
