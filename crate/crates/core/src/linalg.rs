//! Small dense linear-algebra helpers built on nalgebra.
//!
//! Every matrix handled by the estimators is symmetric positive definite in
//! exact arithmetic, so solves go through Cholesky and eigen-decompositions
//! through the symmetric solver applied to `(A + Aᵀ)/2`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Pivot ratio below which a Cholesky factor is treated as singular.
const PIVOT_RTOL: f64 = 1e-13;

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Cholesky factorization that also rejects numerically singular matrices.
pub fn cholesky(a: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{context}: expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::rank(format!("{context}: non-finite entries")));
    }
    let chol = Cholesky::new(symmetrize(a)).ok_or_else(|| Error::rank(context))?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0_f64, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || (min / max) * (min / max) < PIVOT_RTOL {
        return Err(Error::rank(context));
    }
    Ok(chol)
}

pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    Ok(cholesky(a, context)?.solve(b))
}

pub fn spd_solve_mat(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky(a, context)?.solve(b))
}

pub fn spd_inverse(a: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&cholesky(a, context)?.inverse()))
}

/// Eigenvalues and eigenvectors of the symmetrized input (unsorted).
pub fn sym_eigen(a: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    SymmetricEigen::new(symmetrize(a))
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn sym_eigenvalues_sorted(a: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = sym_eigen(a).eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    vals
}

/// Rebuilds `P diag(f(λ)) Pᵀ` from an eigen-decomposition.
pub fn spectral_map(eig: &SymmetricEigen<f64, Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let p = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(p * d * p.transpose()))
}

/// Symmetric square root of a PSD matrix.
pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(&sym_eigen(a), |v| v.max(0.0).sqrt())
}

/// Projection onto the PSD cone: negative eigenvalues are set to zero.
pub fn psd_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(&sym_eigen(a), |v| v.max(0.0))
}

/// `n⁻¹ X diag(w) Xᵀ` for a `p × n` design.
pub fn weighted_cross(design: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let n = design.ncols();
    let mut scaled = design.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= weights[j];
    }
    let m = scaled * design.transpose() / n as f64;
    symmetrize(&m)
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Induced ∞-norm (maximum absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
