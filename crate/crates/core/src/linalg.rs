//! Small dense linear-algebra helpers shared across the crate.
//!
//! The only nontrivial piece is a cyclic Jacobi eigensolver for symmetric
//! matrices. The matrices diagonalized here are small (training-fold Gram
//! matrices, covariance of projected features), where Jacobi's O(n³) per
//! sweep is more than fast enough and its accuracy on symmetric input is
//! excellent.

use ndarray::Array2;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in non-increasing order.
    pub values: Vec<f64>,
    /// Matching eigenvectors, one per column.
    pub vectors: Array2<f64>,
}

/// Diagonalize a symmetric matrix with cyclic Jacobi rotations.
///
/// The input is symmetrized as (A + Aᵀ)/2 first so callers may pass matrices
/// that are symmetric only up to rounding. Panics if `a` is not square.
pub fn symmetric_eigen(a: &Array2<f64>) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen requires a square matrix");
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut v = Array2::<f64>::eye(n);

    if n > 1 {
        // Off-diagonal Frobenius mass relative to the total sets the stop.
        let total: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let tol = 1e-15 * total;
        let max_sweeps = 64;
        for _ in 0..max_sweeps {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[[p, q]] * m[[p, q]];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[[p, q]];
                    if apq.abs() <= tol / (n as f64) {
                        continue;
                    }
                    let app = m[[p, p]];
                    let aqq = m[[q, q]];
                    // Rotation angle zeroing m[p][q] (Golub & Van Loan 8.4).
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[[k, p]];
                        let mkq = m[[k, q]];
                        m[[k, p]] = c * mkp - s * mkq;
                        m[[k, q]] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[[p, k]];
                        let mqk = m[[q, k]];
                        m[[p, k]] = c * mpk - s * mqk;
                        m[[q, k]] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[[k, p]];
                        let vkq = v[[k, q]];
                        v[[k, p]] = c * vkp - s * vkq;
                        v[[k, q]] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = v[[k, src]];
        }
    }
    SymmetricEigen { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix (after symmetrization).
pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    *symmetric_eigen(a)
        .values
        .last()
        .expect("non-empty matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let e = symmetric_eigen(&a);
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_known_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let e = symmetric_eigen(&a);
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        // Eigenvector for 3 is (1,1)/√2 up to sign.
        let v0 = (e.vectors[[0, 0]], e.vectors[[1, 0]]);
        assert!((v0.0.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((v0.0 - v0.1).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let e = symmetric_eigen(&a);
        // VᵀV = I
        let vtv = e.vectors.t().dot(&e.vectors);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[[i, j]] - want).abs() < 1e-12, "VᵀV[{i}][{j}]");
            }
        }
        // V Λ Vᵀ = A
        let mut lam = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            lam[[i, i]] = e.values[i];
        }
        let rec = e.vectors.dot(&lam).dot(&e.vectors.t());
        for i in 0..n {
            for j in 0..n {
                assert!((rec[[i, j]] - a[[i, j]]).abs() < 1e-11, "A[{i}][{j}]");
            }
        }
        // Sorted non-increasing.
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn min_eigenvalue_of_psd_gram_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Array2::<f64>::zeros((6, 4));
        for v in x.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let g = x.dot(&x.t());
        assert!(min_eigenvalue(&g) >= -1e-12);
    }
}
