//! Dense reference computations shared by the integration tests.
#![allow(dead_code)]

use kovi::kernel::{eval_kernel, gram_matrix, KernelFamily, KernelSpec, Point};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new((0..dim).map(|_| rng.random::<f64>()).collect()).unwrap())
        .collect()
}

pub const STATIONARY: [KernelFamily; 4] = [
    KernelFamily::SquaredExponential,
    KernelFamily::Matern12,
    KernelFamily::Matern32,
    KernelFamily::Matern52,
];

/// Mean and standard deviation from an explicit inverse of `K + rho I`.
pub fn dense_predict(spec: &KernelSpec, rho: f64, pts: &[Point], ys: &[f64], z: &Point) -> (f64, f64) {
    let kzz = eval_kernel(spec, z, z).unwrap();
    if pts.is_empty() {
        return (0.0, kzz.sqrt());
    }
    let n = pts.len();
    let a = gram_matrix(spec, pts).unwrap() + DMatrix::identity(n, n) * rho;
    let inv = a.try_inverse().expect("regularized Gram matrix is invertible");
    let k = DVector::from_iterator(n, pts.iter().map(|p| eval_kernel(spec, p, z).unwrap()));
    let y = DVector::from_column_slice(ys);
    let mean = (k.transpose() * &inv * y)[0];
    let var = kzz - (k.transpose() * &inv * &k)[0];
    (mean, var.max(0.0).sqrt())
}

/// `1/2 sum_i ln(1 + lambda_i / rho)` over the Gram eigenvalues.
pub fn eigen_info_gain(spec: &KernelSpec, rho: f64, pts: &[Point]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let eig = SymmetricEigen::new(gram_matrix(spec, pts).unwrap());
    0.5 * eig.eigenvalues.iter().map(|l| (1.0 + l / rho).ln()).sum::<f64>()
}

/// Exact supremum of the information gain over all size-`n` multisets of `candidates`.
pub fn brute_force_sup(spec: &KernelSpec, rho: f64, candidates: &[Point], n: usize) -> f64 {
    fn rec(
        spec: &KernelSpec,
        rho: f64,
        candidates: &[Point],
        start: usize,
        left: usize,
        chosen: &mut Vec<Point>,
        best: &mut f64,
    ) {
        if left == 0 {
            *best = best.max(eigen_info_gain(spec, rho, chosen));
            return;
        }
        for i in start..candidates.len() {
            chosen.push(candidates[i].clone());
            rec(spec, rho, candidates, i, left - 1, chosen, best);
            chosen.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(spec, rho, candidates, 0, n, &mut Vec::new(), &mut best);
    best
}

pub fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
