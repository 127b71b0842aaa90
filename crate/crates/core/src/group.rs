//! Desk-scale locally compact groups.
//!
//! Every group is enumerated: elements are indices `0..order`. Discrete kinds
//! carry counting Haar measure; the discretized circle is `Z_N` with weights
//! `1/N` and metric neighbourhoods. The integers are modelled on a symmetric
//! window `[-W, W]` and products leaving it are reported, never wrapped.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Resolution limit reported for discrete kinds, where every level is exact.
pub const DISCRETE_RESOLUTION: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element(usize);

impl Element {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        Element(i)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupKind {
    /// Multiplication table `table[g][h] = gh`.
    FiniteTable { table: Vec<Vec<usize>> },
    Cyclic { n: usize },
    Symmetric3,
    /// Dihedral group of order `2n`; element `k + n f` is `r^k s^f`.
    Dihedral { n: usize },
    CircleDiscretized { n: usize },
    IntegersWindowed { w: i64 },
}

// Permutations of {1,2,3}: image of 1, 2, 3 (zero based). Products compose
// right to left: (st)(x) = s(t(x)).
const S3_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2], // e
    [1, 0, 2], // (1 2)
    [2, 1, 0], // (1 3)
    [0, 2, 1], // (2 3)
    [1, 2, 0], // (1 2 3)
    [2, 0, 1], // (1 3 2)
];
const S3_LABELS: [&str; 6] = ["e", "(1 2)", "(1 3)", "(2 3)", "(1 2 3)", "(1 3 2)"];

fn s3_index(p: [usize; 3]) -> usize {
    S3_PERMS.iter().position(|q| *q == p).expect("closed under composition")
}

#[derive(Debug)]
pub struct Group {
    kind: GroupKind,
    order: usize,
    identity: usize,
    inverse: Vec<usize>,
    weights: Vec<f64>,
    modular: Vec<f64>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || self.kind == other.kind
    }
}

impl Group {
    pub fn new(kind: GroupKind) -> Result<Arc<Group>> {
        let (order, identity) = match &kind {
            GroupKind::FiniteTable { table } => {
                let id = validate_table(table)?;
                (table.len(), id)
            }
            GroupKind::Cyclic { n } => {
                if *n == 0 {
                    return Err(Error::Unsupported("cyclic group of order 0".into()));
                }
                (*n, 0)
            }
            GroupKind::Symmetric3 => (6, 0),
            GroupKind::Dihedral { n } => {
                if *n < 1 {
                    return Err(Error::Unsupported("dihedral group needs n >= 1".into()));
                }
                (2 * n, 0)
            }
            GroupKind::CircleDiscretized { n } => {
                if *n < 8 {
                    return Err(Error::Unsupported("discretized circle needs N >= 8".into()));
                }
                (*n, 0)
            }
            GroupKind::IntegersWindowed { w } => {
                if *w < 1 {
                    return Err(Error::Unsupported("window half-width must be >= 1".into()));
                }
                ((2 * w + 1) as usize, *w as usize)
            }
        };
        let weight = match kind {
            GroupKind::CircleDiscretized { n } => 1.0 / n as f64,
            _ => 1.0,
        };
        let mut g = Group {
            kind,
            order,
            identity,
            inverse: Vec::new(),
            weights: vec![weight; order],
            modular: vec![1.0; order],
        };
        g.inverse = (0..order).map(|i| g.compute_inverse(i)).collect::<Result<_>>()?;
        Ok(Arc::new(g))
    }

    pub fn cyclic(n: usize) -> Result<Arc<Group>> {
        Self::new(GroupKind::Cyclic { n })
    }

    pub fn symmetric3() -> Arc<Group> {
        Self::new(GroupKind::Symmetric3).expect("S3 is valid")
    }

    pub fn dihedral(n: usize) -> Result<Arc<Group>> {
        Self::new(GroupKind::Dihedral { n })
    }

    pub fn circle(n: usize) -> Result<Arc<Group>> {
        Self::new(GroupKind::CircleDiscretized { n })
    }

    pub fn integers(w: i64) -> Result<Arc<Group>> {
        Self::new(GroupKind::IntegersWindowed { w })
    }

    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Arc<Group>> {
        Self::new(GroupKind::FiniteTable { table })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Element {
        Element(self.identity)
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.order).map(Element)
    }

    pub fn element(&self, i: usize) -> Result<Element> {
        if i < self.order {
            Ok(Element(i))
        } else {
            Err(Error::InvalidElement(i))
        }
    }

    /// True for kinds carrying the discrete topology.
    pub fn is_discrete(&self) -> bool {
        !matches!(self.kind, GroupKind::CircleDiscretized { .. })
    }

    /// True when the group law is total on the enumeration.
    pub fn is_finite(&self) -> bool {
        !matches!(self.kind, GroupKind::IntegersWindowed { .. })
    }

    pub fn is_abelian_kind(&self) -> bool {
        matches!(
            self.kind,
            GroupKind::Cyclic { .. } | GroupKind::CircleDiscretized { .. } | GroupKind::IntegersWindowed { .. }
        )
    }

    pub fn mul(&self, g: Element, h: Element) -> Result<Element> {
        self.check(g)?;
        self.check(h)?;
        let (a, b) = (g.0, h.0);
        let r = match &self.kind {
            GroupKind::FiniteTable { table } => table[a][b],
            GroupKind::Cyclic { n } | GroupKind::CircleDiscretized { n } => (a + b) % n,
            GroupKind::Symmetric3 => {
                let (s, t) = (S3_PERMS[a], S3_PERMS[b]);
                s3_index([s[t[0]], s[t[1]], s[t[2]]])
            }
            GroupKind::Dihedral { n } => {
                let (ka, fa) = (a % n, a / n);
                let (kb, fb) = (b % n, b / n);
                let k = if fa == 0 { (ka + kb) % n } else { (ka + n - kb) % n };
                k + n * ((fa + fb) % 2)
            }
            GroupKind::IntegersWindowed { w } => {
                let x = self.integer_value(a) + self.integer_value(b);
                if x.abs() > *w {
                    return Err(Error::WindowOverflow(x, *w));
                }
                (x + w) as usize
            }
        };
        Ok(Element(r))
    }

    pub fn inverse(&self, g: Element) -> Element {
        Element(self.inverse[g.0])
    }

    fn compute_inverse(&self, a: usize) -> Result<usize> {
        Ok(match &self.kind {
            GroupKind::FiniteTable { table } => (0..self.order)
                .find(|&b| table[a][b] == self.identity)
                .ok_or_else(|| Error::InvalidTable(format!("element {a} has no inverse")))?,
            GroupKind::Cyclic { n } | GroupKind::CircleDiscretized { n } => (n - a) % n,
            GroupKind::Symmetric3 => {
                let p = S3_PERMS[a];
                let mut q = [0; 3];
                for (x, &px) in p.iter().enumerate() {
                    q[px] = x;
                }
                s3_index(q)
            }
            GroupKind::Dihedral { n } => {
                let (k, f) = (a % n, a / n);
                if f == 0 {
                    (n - k) % n
                } else {
                    a
                }
            }
            GroupKind::IntegersWindowed { w } => (w - self.integer_value(a)) as usize,
        })
    }

    fn check(&self, g: Element) -> Result<()> {
        if g.0 < self.order {
            Ok(())
        } else {
            Err(Error::InvalidElement(g.0))
        }
    }

    fn integer_value(&self, i: usize) -> i64 {
        match self.kind {
            GroupKind::IntegersWindowed { w } => i as i64 - w,
            _ => i as i64,
        }
    }

    /// Haar weight `w(g)`: counting measure, or `1/N` on the circle.
    pub fn haar_weight(&self, g: Element) -> f64 {
        self.weights[g.0]
    }

    pub fn haar_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_g w(g) f(g)`.
    pub fn haar_integrate<F: Fn(Element) -> C64>(&self, f: F) -> C64 {
        self.elements().map(|g| f(g) * self.haar_weight(g)).sum()
    }

    pub fn modular(&self, g: Element) -> f64 {
        self.modular[g.0]
    }

    pub fn resolution_limit(&self) -> u32 {
        match self.kind {
            GroupKind::CircleDiscretized { n } => (n as f64).log2().floor() as u32 - 2,
            _ => DISCRETE_RESOLUTION,
        }
    }

    /// Neighbourhood `U_m` of the identity, sorted by element index.
    ///
    /// On the circle `U_m` is the centred arc of total length `2^{-m} π`.
    pub fn neighborhood(&self, m: u32) -> Result<Vec<Element>> {
        let limit = self.resolution_limit();
        if m > limit {
            return Err(Error::ResolutionExceeded { level: m, limit });
        }
        Ok(match self.kind {
            GroupKind::CircleDiscretized { n } => {
                let half = n >> (m + 2);
                self.elements()
                    .filter(|g| g.0.min(n - g.0) <= half)
                    .collect()
            }
            _ => vec![self.identity()],
        })
    }

    /// Angle of a circle element in `(-π, π]`; zero for other kinds.
    pub fn angle(&self, g: Element) -> f64 {
        match self.kind {
            GroupKind::CircleDiscretized { n } => {
                let k = g.0 as f64;
                let t = 2.0 * PI * k / n as f64;
                if t > PI {
                    t - 2.0 * PI
                } else {
                    t
                }
            }
            _ => 0.0,
        }
    }

    pub fn label(&self, g: Element) -> String {
        match &self.kind {
            GroupKind::Symmetric3 => S3_LABELS[g.0].to_string(),
            GroupKind::Dihedral { n } => {
                let (k, f) = (g.0 % n, g.0 / n);
                match (k, f) {
                    (0, 0) => "e".into(),
                    (0, _) => "s".into(),
                    (k, 0) => format!("r^{k}"),
                    (k, _) => format!("r^{k} s"),
                }
            }
            GroupKind::IntegersWindowed { .. } => self.integer_value(g.0).to_string(),
            _ => g.0.to_string(),
        }
    }

    pub fn element_by_label(&self, label: &str) -> Option<Element> {
        let label = label.trim();
        self.elements().find(|&g| self.label(g) == label).or_else(|| {
            if matches!(self.kind, GroupKind::Symmetric3 | GroupKind::Dihedral { .. }) && label == "1" {
                Some(self.identity())
            } else {
                None
            }
        })
    }

    /// A generating set: the unit rotation for cyclic kinds, `(1 2)` and
    /// `(1 2 3)` for `S_3`, `r` and `s` for dihedral groups, every
    /// non-identity element for tables.
    pub fn generators(&self) -> Vec<Element> {
        let idx: Vec<usize> = match &self.kind {
            GroupKind::Cyclic { n } | GroupKind::CircleDiscretized { n } => {
                if *n > 1 { vec![1] } else { vec![] }
            }
            GroupKind::Symmetric3 => vec![1, 4],
            GroupKind::Dihedral { n } => {
                if *n > 1 { vec![1, *n] } else { vec![*n] }
            }
            GroupKind::IntegersWindowed { w } => vec![*w as usize + 1],
            GroupKind::FiniteTable { .. } => (0..self.order).filter(|&i| i != self.identity).collect(),
        };
        idx.into_iter().map(Element).collect()
    }

    /// Images of `1, 2, 3` (zero based) for elements of `S_3`.
    pub fn permutation(&self, g: Element) -> Option<[usize; 3]> {
        matches!(self.kind, GroupKind::Symmetric3).then(|| S3_PERMS[g.0])
    }

    /// Integer value of an element of the windowed integers (or the index otherwise).
    pub fn value(&self, g: Element) -> i64 {
        self.integer_value(g.0)
    }

    /// Exhaustive check of the group axioms on the enumeration. Windowed kinds
    /// are checked on the triples whose products stay inside the window.
    pub fn check_axioms(&self) -> Result<()> {
        let e = self.identity();
        for g in self.elements() {
            if self.mul(e, g)? != g || self.mul(g, e)? != g {
                return Err(Error::InvalidTable(format!("identity fails at {g}")));
            }
            if self.mul(g, self.inverse(g))? != e || self.mul(self.inverse(g), g)? != e {
                return Err(Error::InvalidTable(format!("inverse fails at {g}")));
            }
        }
        for a in self.elements() {
            for b in self.elements() {
                let Ok(ab) = self.mul(a, b) else { continue };
                for c in self.elements() {
                    let (Ok(bc), Ok(ab_c)) = (self.mul(b, c), self.mul(ab, c)) else { continue };
                    if self.mul(a, bc)? != ab_c {
                        return Err(Error::InvalidTable(format!("associativity fails at {a},{b},{c}")));
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_table(table: &[Vec<usize>]) -> Result<usize> {
    let n = table.len();
    if n == 0 {
        return Err(Error::InvalidTable("empty table".into()));
    }
    if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
        return Err(Error::InvalidTable("table must be square with entries < order".into()));
    }
    let id = (0..n)
        .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
        .ok_or_else(|| Error::InvalidTable("no identity".into()))?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(Error::InvalidTable(format!("not associative at ({a},{b},{c})")));
                }
            }
        }
    }
    Ok(id)
}
