//! Recovery of a representation `(F, σ)` from the structure alone.
//!
//! Only the predicate `[·,·]`, the maps `π_a` and the `i`-symbol are used to
//! build `F`; the ambient embedding of the spanning family enters only in the
//! final Procrustes fit that compares `F` with the original space.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::MetricStructure;
use crate::error::{Error, Result};
use crate::linalg::{c, inner, operator_norm, sorted_svd, symmetric_eigen_real, CMatrix, CVector, C64};

/// Gram eigenvalues below `KERNEL_TOL · λ_max` span the kernel `F⁰`.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Complex dimension of `F`.
    pub dim: usize,
    /// `σ(a)` in an orthonormal basis of `F`, for every base sort.
    pub sigma: BTreeMap<String, CMatrix>,
    /// Isometry `U: F → E` from the Procrustes fit.
    pub intertwiner: CMatrix,
    /// `max_a ‖U σ(a) − π(a) U‖`.
    pub residual: f64,
    /// Largest deviation of `[ξ,ζ] + i[ξ,iζ]`, and of the inner product of
    /// the reconstructed coordinates, from `⟨ξ,ζ⟩` over the family.
    pub inner_product_error: f64,
}

struct Quotient {
    /// `Λ^{-1/2} V^T`: maps predicate values against the family to coordinates.
    coord: DMatrix<f64>,
    /// `V Λ^{-1/2}`: right inverse of the family coordinate matrix.
    pinv: DMatrix<f64>,
    y: DMatrix<f64>,
}

fn quotient(gram: &DMatrix<f64>) -> Quotient {
    let (vals, vecs) = symmetric_eigen_real(gram);
    let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > KERNEL_TOL * lmax).collect();
    let r = keep.len();
    let k = gram.nrows();
    let mut coord = DMatrix::zeros(r, k);
    let mut pinv = DMatrix::zeros(k, r);
    let mut y = DMatrix::zeros(r, k);
    for (row, &e) in keep.iter().enumerate() {
        let s = vals[e].sqrt();
        for col in 0..k {
            coord[(row, col)] = vecs[(col, e)] / s;
            pinv[(col, row)] = vecs[(col, e)] / s;
            y[(row, col)] = vecs[(col, e)] * s;
        }
    }
    Quotient { coord, pinv, y }
}

/// Complex inner product on `ℝ^r` with complex structure `J`.
fn cip(x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>, j: &DMatrix<f64>) -> C64 {
    c(x.dot(y), x.dot(&(j * y)))
}

pub fn reconstruct(m: &MetricStructure, tol: f64) -> Result<Reconstruction> {
    let n = m.ambient_dim();
    // spanning family: A e_j and i A e_j over the base sorts
    let mut family: Vec<CVector> = Vec::new();
    for &b in m.base() {
        let op = m.sorts()[b].set.operator();
        for j in 0..op.ncols() {
            let v: CVector = op.column(j).into_owned();
            family.push(v.clone());
            family.push(v * c(0.0, 1.0));
        }
    }
    let k = family.len();
    let gram = DMatrix::from_fn(k, k, |i, l| m.predicate(&family[i], &family[l]));
    let q = quotient(&gram);
    let r = q.y.nrows();
    if !r.is_multiple_of(2) {
        return Err(Error::ReconstructionMismatch(format!("odd real dimension {r}")));
    }
    let coords_of = |w: &CVector| -> nalgebra::DVector<f64> {
        let b = nalgebra::DVector::from_iterator(k, family.iter().map(|v| m.predicate(w, v)));
        &q.coord * b
    };
    // complex structure from the i-symbol: i(v) is the next family member, i(iv) = −v
    let mut yi = DMatrix::zeros(r, k);
    for t in 0..k / 2 {
        yi.set_column(2 * t, &q.y.column(2 * t + 1));
        yi.set_column(2 * t + 1, &(-q.y.column(2 * t)));
    }
    let jm = &yi * &q.pinv;
    let jsq = (&jm * &jm + DMatrix::<f64>::identity(r, r)).amax();
    if jsq > 1e-6 {
        return Err(Error::ReconstructionMismatch(format!("i-symbol squares to -1 only up to {jsq:.2e}")));
    }

    // complex orthonormal basis of F
    let half = r / 2;
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(half);
    for e in 0..r {
        if basis.len() == half {
            break;
        }
        let mut x = nalgebra::DVector::<f64>::zeros(r);
        x[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let z = cip(&x, b, &jm);
                x -= b * z.re + (&jm * b) * z.im;
            }
        }
        let nx = x.norm();
        if nx > 1e-8 {
            basis.push(x / nx);
        }
    }
    if basis.len() != half {
        return Err(Error::ReconstructionMismatch("complex basis is incomplete".into()));
    }
    let to_complex = |x: &nalgebra::DVector<f64>| -> CVector {
        CVector::from_iterator(half, basis.iter().map(|b| cip(x, b, &jm)))
    };

    // σ(a) on F from the images π_a v_k
    let mut sigma = BTreeMap::new();
    for &a in m.base() {
        let pa = &m.sorts()[a].pi;
        let mut z = DMatrix::zeros(r, k);
        for (col, v) in family.iter().enumerate() {
            z.set_column(col, &coords_of(&(pa * v)));
        }
        let sr = &z * &q.pinv;
        let sc = CMatrix::from_fn(half, half, |l, mcol| cip(&(&sr * &basis[mcol]), &basis[l], &jm));
        sigma.insert(m.sorts()[a].name.clone(), sc);
    }

    // Procrustes: isometry U minimizing Σ ‖U z_k − v_k‖²
    let zs: Vec<CVector> = (0..k).map(|t| to_complex(&q.y.column(t).into_owned())).collect();
    let mut cross = CMatrix::zeros(n, half);
    for (v, z) in family.iter().zip(&zs) {
        cross += v * z.adjoint();
    }
    let svd = sorted_svd(&cross);
    let u = &svd.u * svd.v.adjoint();

    let mut residual: f64 = 0.0;
    for &a in m.base() {
        let s = &sigma[&m.sorts()[a].name];
        residual = residual.max(operator_norm(&(&u * s - &m.sorts()[a].pi * &u)));
    }
    let mut ip_err: f64 = 0.0;
    for i in 0..k {
        for l in 0..k {
            let truth = inner(&family[i], &family[l]);
            let pred = c(m.predicate(&family[i], &family[l]), m.predicate(&family[i], &(&family[l] * c(0.0, 1.0))));
            ip_err = ip_err.max((pred - truth).norm()).max((inner(&zs[i], &zs[l]) - truth).norm());
        }
    }
    if residual > tol {
        return Err(Error::ReconstructionMismatch(format!("intertwiner residual {residual:.3e} exceeds {tol:.1e}")));
    }
    Ok(Reconstruction { dim: half, sigma, intertwiner: u, residual, inner_product_error: ip_err })
}
