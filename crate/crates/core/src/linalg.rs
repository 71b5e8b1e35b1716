//! Tolerance-based pseudoinverses.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular values (or eigenvalue magnitudes) at or below this fraction of
/// the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Moore–Penrose pseudoinverse of a general matrix via SVD.
pub fn pseudoinverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * largest;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (v_t.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    out
}

/// `A⁺ b` for symmetric `A`, through its eigendecomposition.
pub fn symmetric_pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let largest = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * largest;
    let mut coeffs = eig.eigenvectors.transpose() * b;
    for (c, &l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c = if l.abs() > cutoff && l != 0.0 { *c / l } else { 0.0 };
    }
    &eig.eigenvectors * coeffs
}
