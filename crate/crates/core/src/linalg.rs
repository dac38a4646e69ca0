//! Small dense symmetric-matrix helpers used by the SPD manifold.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    (eig.eigenvalues, eig.eigenvectors)
}

/// `Q diag(f(λ)) Qᵀ` for the eigendecomposition of a symmetric matrix.
pub(crate) fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    compose(&vecs, &vals.map(f))
}

pub(crate) fn compose(vecs: &DMatrix<f64>, vals: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vecs * DMatrix::from_diagonal(vals);
    symmetrize(&(scaled * vecs.transpose()))
}

/// Returns `(X^{1/2}, X^{-1/2})` for a symmetric positive definite `X`.
pub(crate) fn sqrt_pair(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (vals, vecs) = sym_eigen(x);
    let sq = vals.map(|l| l.max(0.0).sqrt());
    let isq = sq.map(|s| 1.0 / s);
    (compose(&vecs, &sq), compose(&vecs, &isq))
}

/// Eigenvalues of a symmetric positive definite matrix by cyclic Jacobi.
///
/// Jacobi rotations with a relative off-diagonal threshold keep small
/// eigenvalues of strongly graded matrices (`D A D` with `D` diagonal and
/// wildly varying) accurate to a few ulps relative, which the tridiagonal QR
/// path does not.
pub(crate) fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq == 0.0 || apq.abs() <= f64::EPSILON * 0.5 * (app * aqq).abs().sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    a.diagonal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_symmetric_eigen_on_mild_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let mut a: Vec<f64> = jacobi_eigenvalues(m.clone()).iter().copied().collect();
        let mut b: Vec<f64> = sym_eigen(&m).0.iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn jacobi_is_relatively_accurate_on_graded_matrix() {
        // D A D with D = diag(1e-60, 1, 1e60); eigenvalues then scale like
        // the Schur pivots of A in grading order.
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 1.5, 0.4, 0.3, 0.4, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1e-60, 1.0, 1e60]));
        let graded = &d * &a * &d;
        let mut vals: Vec<f64> = jacobi_eigenvalues(graded).iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        // smallest ≈ 1e-120 * det(A) / det(A[1..,1..])
        let det = a.determinant();
        let minor = a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)];
        let expected_small = 1e-120 * det / minor;
        assert!((vals[0] / expected_small - 1.0).abs() < 1e-10);
        assert!((vals[2] / (1e120 * a[(2, 2)]) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sqrt_pair_inverts() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let (s, si) = sqrt_pair(&m);
        assert!((&s * &s - &m).norm() < 1e-12);
        assert!((&s * &si - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
