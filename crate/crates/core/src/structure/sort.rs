//! Sorts `S_a = π(a)·ball` and the exact distance to them.

use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::linalg::{c, random_ball_vector, sorted_svd, CMatrix, CVector, SortedSvd};

/// Singular values below `SV_FLOOR · σ_max` are treated as zero by the solver.
const SV_FLOOR: f64 = 1e-14;

/// Result of the norm-constrained least-squares problem `min_{‖ζ‖≤1} ‖Aζ − ξ‖`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub distance: f64,
    /// Minimizer `ζ` in the unit ball.
    pub witness: CVector,
    /// Nearest point `Aζ` of the set.
    pub nearest: CVector,
}

/// Image of the closed unit ball under a fixed matrix, with cached SVD.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    op: CMatrix,
    svd: SortedSvd,
    rank: usize,
}

impl Ellipsoid {
    pub fn new(op: CMatrix) -> Self {
        let svd = sorted_svd(&op);
        let smax = svd.s.first().copied().unwrap_or(0.0);
        let rank = svd.s.iter().filter(|&&s| s > SV_FLOOR * smax && s > 0.0).count();
        Ellipsoid { op, svd, rank }
    }

    pub fn operator(&self) -> &CMatrix {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    /// Dimension of the ball being mapped.
    pub fn domain_dim(&self) -> usize {
        self.op.ncols()
    }

    /// Largest singular value: the radius of the set.
    pub fn radius(&self) -> f64 {
        self.svd.s.first().copied().unwrap_or(0.0)
    }

    /// Right singular vector of the largest singular value.
    pub fn top_direction(&self) -> CVector {
        if self.svd.v.ncols() == 0 {
            return CVector::zeros(self.domain_dim());
        }
        self.svd.v.column(0).into_owned()
    }

    /// Exact solution by SVD and a safeguarded Newton iteration on the
    /// secular equation `Σ σ²|c|²/(σ²+λ)² = 1`.
    pub fn project(&self, xi: &CVector) -> Projection {
        let k = self.rank;
        let u = self.svd.u.columns(0, k);
        let coef: Vec<_> = (0..k).map(|j| u.column(j).dotc(xi)).collect();
        let sig = &self.svd.s[..k];
        let norm_at = |lam: f64| -> f64 {
            coef.iter()
                .zip(sig)
                .map(|(cj, s)| s * s * cj.norm_sqr() / (s * s + lam).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let interior: f64 = coef.iter().zip(sig).map(|(cj, s)| cj.norm_sqr() / (s * s)).sum();
        let lam = if interior <= 1.0 {
            0.0
        } else {
            // ‖y(λ)‖ is decreasing; bracket the root of ‖y(λ)‖ = 1.
            let cn: f64 = coef.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let (mut lo, mut hi) = (0.0f64, sig[0] * cn + 1e-300);
            let mut lam = 0.0;
            for _ in 0..200 {
                let ny = norm_at(lam);
                if (ny - 1.0).abs() <= 4.0 * f64::EPSILON {
                    break;
                }
                if ny > 1.0 {
                    lo = lam;
                } else {
                    hi = lam;
                }
                // Newton on 1/‖y‖ − 1, which is close to linear in λ.
                let d: f64 = coef
                    .iter()
                    .zip(sig)
                    .map(|(cj, s)| -2.0 * s * s * cj.norm_sqr() / (s * s + lam).powi(3))
                    .sum();
                let dphi = -0.5 * d / (ny * ny * ny);
                let mut next = lam - (1.0 / ny - 1.0) / dphi;
                if !(next > lo && next < hi) || !next.is_finite() {
                    next = 0.5 * (lo + hi);
                }
                if (next - lam).abs() <= 1e-17 * (1.0 + lam) {
                    lam = next;
                    break;
                }
                lam = next;
            }
            lam
        };
        let mut y = CVector::zeros(self.domain_dim());
        let v = self.svd.v.columns(0, k);
        for j in 0..k {
            let s = sig[j];
            y += v.column(j) * (coef[j] * c(s / (s * s + lam), 0.0));
        }
        // rounding may leave the witness a hair outside the ball
        let n = y.norm();
        if n > 1.0 {
            y /= c(n, 0.0);
        }
        let nearest = &self.op * &y;
        Projection { distance: (&nearest - xi).norm(), witness: y, nearest }
    }

    pub fn distance(&self, xi: &CVector) -> f64 {
        self.project(xi).distance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        &self.op * random_ball_vector(self.domain_dim(), rng)
    }

    /// The point `A·clamp(ζ)`.
    pub fn point(&self, zeta: &CVector) -> CVector {
        let mut z = zeta.clone();
        crate::linalg::clamp_to_ball(&mut z);
        &self.op * z
    }
}

/// Distance from `ξ` to `A·ball` with its witness.
pub fn sort_distance(a: &CMatrix, xi: &CVector) -> Projection {
    Ellipsoid::new(a.clone()).project(xi)
}

/// A sort of the structure: the algebra element `a`, the operator `π(a)`
/// used by the function symbols, and the set the sort ranges over (normally
/// `π(a)·ball`).
#[derive(Clone, Debug)]
pub struct Sort {
    pub name: String,
    pub element: AlgebraElement,
    pub pi: CMatrix,
    pub set: Ellipsoid,
    /// `‖a‖₁`.
    pub bound: f64,
}

impl Sort {
    pub fn new(name: String, element: AlgebraElement, pi: CMatrix) -> Self {
        let bound = element.norm1();
        let set = Ellipsoid::new(pi.clone());
        Sort { name, element, pi, set, bound }
    }

    pub fn distance(&self, xi: &CVector) -> f64 {
        self.set.distance(xi)
    }

    pub fn project(&self, xi: &CVector) -> Projection {
        self.set.project(xi)
    }
}
