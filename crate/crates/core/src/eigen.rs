//! Cyclic Jacobi eigensolver for small dense symmetric matrices.
//!
//! Country-side similarity matrices are at most a few hundred rows, where
//! Jacobi is fast enough and gives eigenvectors orthonormal to machine
//! precision.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) struct SymmetricEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.values.len();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }
}

const MAX_SWEEPS: usize = 100;

/// Diagonalizes the symmetric row-major `n x n` matrix `a`.
pub(crate) fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> SymmetricEigen {
    debug_assert_eq!(a.len(), n * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Rutishauser's stable rotation
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        a[r * n + p] = new_rp;
                        a[p * n + r] = new_rp;
                        a[r * n + q] = new_rq;
                        a[q * n + r] = new_rq;
                    }
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    SymmetricEigen { values, vectors, sweeps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &[f64], n: usize, eig: &SymmetricEigen) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let x = eig.vector(k);
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
                worst = worst.max((ax - eig.values[k] * x[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn two_by_two() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let eig = symmetric_eigen(a.clone(), 2);
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        assert!(residual(&a, 2, &eig) < 1e-14);
    }

    #[test]
    fn random_symmetric_residuals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 3, 7, 25] {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            let eig = symmetric_eigen(a.clone(), n);
            assert!(residual(&a, n, &eig) < 1e-12, "n = {n}");
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            // orthonormal columns
            for p in 0..n {
                for q in 0..n {
                    let dot: f64 = (0..n).map(|i| eig.vectors[i * n + p] * eig.vectors[i * n + q]).sum();
                    let want = if p == q { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
        }
    }
}
