//! Multistart projected ascent over products of complex unit balls.
//!
//! The reported maximum is a lower bound on the true supremum: a value of zero
//! means that no violation was found at the given budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, clamp_to_ball, random_ball_vector, CVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AscentOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative improvement below which a start stops.
    pub tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { starts: 32, seed: 0, max_iter: 200, tol: 1e-13 }
    }
}

#[derive(Clone, Debug)]
pub struct AscentResult {
    pub value: f64,
    pub point: Vec<CVector>,
    /// Index of the winning start.
    pub start: usize,
    pub evaluations: usize,
}

/// Objective value with an optional gradient (one complex vector per block,
/// real and imaginary parts being the partial derivatives).
pub type Evaluation = (f64, Option<Vec<CVector>>);

/// Seed for start `k` of a run seeded with `seed`; independent of scheduling.
pub fn start_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Maximizes `f` over `∏ ball(dims[i])`.
///
/// Starts are the `extra` points followed by `opts.starts` seeded random
/// points. The reduction picks the largest value, ties going to the earliest
/// start, so the result does not depend on thread scheduling.
pub fn maximize<F>(dims: &[usize], opts: &AscentOptions, extra: &[Vec<CVector>], f: F) -> AscentResult
where
    F: Fn(&[CVector]) -> Evaluation + Sync,
{
    let mut starts: Vec<Vec<CVector>> = extra.to_vec();
    for k in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(start_seed(opts.seed, k));
        starts.push(dims.iter().map(|&d| random_ball_vector(d, &mut rng)).collect());
    }
    let runs: Vec<(f64, Vec<CVector>, usize)> = starts.into_par_iter().map(|z| climb(z, opts, &f)).collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.0 > runs[best].0 {
            best = k;
        }
    }
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (value, point, _) = runs.into_iter().nth(best).unwrap_or((f64::NEG_INFINITY, Vec::new(), 0));
    AscentResult { value, point, start: best, evaluations }
}

fn project(z: &mut [CVector]) {
    z.iter_mut().for_each(clamp_to_ball);
}

fn numeric_gradient<F>(z: &[CVector], f: &F, evals: &mut usize) -> Vec<CVector>
where
    F: Fn(&[CVector]) -> Evaluation,
{
    const H: f64 = 1e-7;
    let mut grad: Vec<CVector> = z.iter().map(|b| CVector::zeros(b.len())).collect();
    let mut probe = z.to_vec();
    for b in 0..z.len() {
        for k in 0..z[b].len() {
            for (part, unit) in [(0, c(1.0, 0.0)), (1, c(0.0, 1.0))] {
                let orig = probe[b][k];
                probe[b][k] = orig + unit * H;
                let up = f(&probe).0;
                probe[b][k] = orig - unit * H;
                let down = f(&probe).0;
                probe[b][k] = orig;
                *evals += 2;
                let d = (up - down) / (2.0 * H);
                if part == 0 {
                    grad[b][k].re = d;
                } else {
                    grad[b][k].im = d;
                }
            }
        }
    }
    grad
}

fn climb<F>(mut z: Vec<CVector>, opts: &AscentOptions, f: &F) -> (f64, Vec<CVector>, usize)
where
    F: Fn(&[CVector]) -> Evaluation,
{
    project(&mut z);
    let (mut val, mut grad) = f(&z);
    let mut evals = 1;
    let mut step = 1.0;
    for _ in 0..opts.max_iter {
        let g = match grad.take() {
            Some(g) => g,
            None => numeric_gradient(&z, f, &mut evals),
        };
        let gnorm: f64 = g.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        if gnorm < 1e-15 || !gnorm.is_finite() {
            break;
        }
        let mut t = step;
        let mut moved = false;
        while t > 1e-12 {
            let mut cand: Vec<CVector> = z.iter().zip(&g).map(|(x, d)| x + d * c(t / gnorm, 0.0)).collect();
            project(&mut cand);
            let (cv, cg) = f(&cand);
            evals += 1;
            if cv > val {
                let gain = cv - val;
                z = cand;
                val = cv;
                grad = cg;
                step = (2.0 * t).min(4.0);
                moved = gain > opts.tol * (1.0 + val.abs());
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (val, z, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_inner;

    #[test]
    fn linear_objective_reaches_the_sphere() {
        let a = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0)]);
        let opts = AscentOptions { starts: 4, seed: 1, ..Default::default() };
        let r = maximize(&[2], &opts, &[], |z| (real_inner(&z[0], &a), Some(vec![a.clone()])));
        assert!((r.value - a.norm()).abs() < 1e-10);
    }

    #[test]
    fn numeric_gradient_path_agrees() {
        let a = CVector::from_vec(vec![c(0.3, -0.2), c(0.1, 0.9)]);
        let opts = AscentOptions { starts: 4, seed: 2, ..Default::default() };
        let r = maximize(&[2], &opts, &[], |z| (real_inner(&z[0], &a), None));
        assert!((r.value - a.norm()).abs() < 1e-8);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = CVector::from_vec(vec![c(0.3, -0.2), c(0.1, 0.9), c(1.0, 0.0)]);
        let f = |z: &[CVector]| ((&z[0] - &a).norm() - z[0].norm_squared(), None);
        let opts = AscentOptions { starts: 8, seed: 7, ..Default::default() };
        let r1 = maximize(&[3], &opts, &[], f);
        let r2 = maximize(&[3], &opts, &[], f);
        assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        assert_eq!(r1.point, r2.point);
    }
}
