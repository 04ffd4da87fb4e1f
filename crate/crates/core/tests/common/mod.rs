//! Test-only oracles, independent of the library's solver paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha20Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Primal ridge form `(ĀᵀĀ + λI)⁻¹Āᵀy` via LU.
pub fn primal_ridge(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let p = a.ncols();
    let m = a.transpose() * a + DMatrix::identity(p, p) * lambda;
    m.lu().solve(&a.tr_mul(y)).expect("shifted normal matrix is invertible")
}

/// Largest singular value by power iteration on `ĀᵀĀ`.
pub fn power_iteration_smax(a: &DMatrix<f64>) -> f64 {
    let mut v = DVector::from_fn(a.ncols(), |i, _| 1.0 + (i as f64 * 0.37).sin());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..100_000 {
        let w = a.tr_mul(&(a * &v));
        let next = w.norm().sqrt();
        v = w / (next * next);
        if (next - estimate).abs() <= 1e-15 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

pub fn relative_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / scale
}
