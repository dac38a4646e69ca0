//! Symmetric positive definite matrices with the affine-invariant metric
//! `⟨U,V⟩_X = tr(X⁻¹ U X⁻¹ V)`. Points and tangent vectors are stored row-major.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{sqrt_pair, sym_apply, sym_eigen, symmetrize};

/// Eigenvalue floor applied before taking matrix logarithms.
pub(crate) const EIGEN_FLOOR: f64 = 1e-12;

pub(crate) fn to_matrix(n: usize, coords: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, coords.as_slice())
}

pub(crate) fn from_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    let s = symmetrize(m);
    DVector::from_iterator(s.len(), s.transpose().iter().copied())
}

pub(super) fn exp(n: usize, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let xm = to_matrix(n, x);
    let (s, si) = sqrt_pair(&xm);
    let m = &si * to_matrix(n, v) * &si;
    let e = sym_apply(&m, f64::exp);
    from_matrix(&(&s * e * &s))
}

pub(super) fn log(n: usize, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xm = to_matrix(n, x);
    let (s, si) = sqrt_pair(&xm);
    let m = &si * to_matrix(n, y) * &si;
    let l = sym_apply(&m, |lam| lam.max(EIGEN_FLOOR).ln());
    from_matrix(&(&s * l * &s))
}

pub(super) fn dist(n: usize, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let (_, si) = sqrt_pair(&to_matrix(n, x));
    let m = &si * to_matrix(n, y) * &si;
    let (vals, _) = sym_eigen(&m);
    vals.iter()
        .map(|l| l.max(EIGEN_FLOOR).ln().powi(2))
        .sum::<f64>()
        .sqrt()
}

pub(super) fn inner(n: usize, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let xi = sym_apply(&to_matrix(n, x), |l| 1.0 / l);
    let a = &xi * to_matrix(n, u);
    let b = &xi * to_matrix(n, v);
    (a * b).trace()
}

pub(super) fn min_eigenvalue(n: usize, x: &DVector<f64>) -> f64 {
    sym_eigen(&to_matrix(n, x)).0.min()
}

/// Orthonormal tangent basis at `x`: `X^{1/2} E X^{1/2}` for the Frobenius
/// orthonormal basis `E` of symmetric matrices.
pub(super) fn tangent_basis(n: usize, x: &DVector<f64>) -> Vec<DVector<f64>> {
    let (s, _) = sqrt_pair(&to_matrix(n, x));
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            out.push(from_matrix(&(&s * e * &s)));
        }
    }
    out
}
