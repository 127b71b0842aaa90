//! Dense complex linear algebra helpers shared by every layer.
//!
//! Inner products are linear in the first argument and conjugate-linear in
//! the second: `inner(x, y) = Σ x_k conj(y_k)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance under which singular values count as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// The real predicate `[x, y] = Re <x, y>`.
pub fn real_inner(x: &CVector, y: &CVector) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    sorted_svd(m).s
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Thin SVD with singular triplets sorted by decreasing singular value.
#[derive(Clone, Debug)]
pub struct SortedSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: CMatrix,
}

/// Thin SVD by one-sided Jacobi rotations. nalgebra's complex SVD can return
/// singular vectors off by ~1e-2 on clustered spectra.
pub fn sorted_svd(m: &CMatrix) -> SortedSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd {
            u: CMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        };
    }
    if rows < cols {
        let t = sorted_svd(&m.adjoint());
        return SortedSvd { u: t.v, s: t.s, v: t.u };
    }
    let mut w = m.clone();
    let mut v = identity(cols);
    // columns below this squared norm are rounding noise
    let floor = (f64::EPSILON * m.norm()).powi(2);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = c(gamma.re / g, gamma.im / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let (a, b) = (mat[(r, p)], mat[(r, q)] * phase.conj());
                        mat[(r, p)] = a * cs - b * sn;
                        mat[(r, q)] = a * sn + b * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut su = CMatrix::zeros(rows, k);
    let mut sv = CMatrix::zeros(cols, k);
    let mut s = Vec::with_capacity(k);
    for (j, &o) in order.iter().enumerate() {
        sv.set_column(j, &v.column(o));
        s.push(norms[o]);
        let orthogonalize = |mut x: CVector, su: &CMatrix| {
            for _ in 0..2 {
                for i in 0..j {
                    let col = su.column(i);
                    let proj = col.dotc(&x);
                    x -= col * proj;
                }
            }
            x
        };
        let mut x = CVector::zeros(rows);
        if norms[o] * norms[o] > floor {
            x = orthogonalize(w.column(o) / c(norms[o], 0.0), &su);
        }
        if x.norm() <= 0.5 {
            // negligible column: the standard basis vector farthest from the span so far
            x = (0..rows)
                .map(|e| orthogonalize(CVector::from_fn(rows, |r, _| c(if r == e { 1.0 } else { 0.0 }, 0.0)), &su))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("rows > 0");
        }
        let n = x.norm();
        su.set_column(j, &(x / c(n, 0.0)));
    }
    SortedSvd { u: su, s, v: sv }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize to kill rounding asymmetry
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = CMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (j, &o) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(o));
        vals.push(eig.eigenvalues[o]);
    }
    (vals, vecs)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let h = (m + m.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (j, &o) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(o));
        vals.push(eig.eigenvalues[o]);
    }
    (vals, vecs)
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn range_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let svd = sorted_svd(m);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|&&s| smax > 0.0 && s > rel_tol * smax).count();
    svd.u.columns(0, rank).into_owned()
}

/// Orthogonal projector onto the column span of `m` and its rank.
pub fn range_projector(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let basis = range_basis(m, rel_tol);
    let rank = basis.ncols();
    (&basis * basis.adjoint(), rank)
}

/// Orthonormal basis of `{x : m x = 0}`, using an absolute singular-value cutoff.
pub fn null_space(m: &CMatrix, abs_tol: f64) -> CMatrix {
    let n = m.ncols();
    if m.nrows() == 0 {
        return CMatrix::identity(n, n);
    }
    // Work with the Hermitian Gram matrix so that the full right space is available.
    let gram = m.adjoint() * m;
    let (vals, vecs) = hermitian_eigen(&gram);
    let k = vals.iter().filter(|&&v| v <= abs_tol * abs_tol).count();
    vecs.columns(0, k).into_owned()
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m.adjoint() * m - identity(m.nrows())).camax() <= tol
}

pub fn random_gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    CVector::from_fn(d, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    loop {
        let v = random_gaussian_vector(d, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / c(n, 0.0);
        }
    }
}

/// Uniform sample from the closed complex unit ball of dimension `d`.
pub fn random_ball_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let r: f64 = rng.random::<f64>().powf(1.0 / (2.0 * d.max(1) as f64));
    random_unit_vector(d, rng) * c(r, 0.0)
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / c(rjj.norm(), 0.0) } else { c(1.0, 0.0) };
        let col = q.column(j) * phase;
        out.set_column(j, &col);
    }
    out
}

/// Projection onto the closed unit ball.
pub fn clamp_to_ball(v: &mut CVector) {
    let n = v.norm();
    if n > 1.0 {
        *v /= c(n, 0.0);
    }
}

pub fn to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(p: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|z| c(z[0], z[1])))
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMatrix::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}
