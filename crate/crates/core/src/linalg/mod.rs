//! Small dense matrix machinery: elementary symmetric polynomials and their
//! gradients, polar decomposition, distance to `SO(n)`, and the pointwise
//! vector inequality used to linearize the conformal energy.

mod figalli_zhang;
mod polar;
mod symmetric;

pub use figalli_zhang::{
    figalli_zhang_c0, figalli_zhang_check, fz_margin, fz_reduced_ratio, FzCheck,
};
pub use polar::{dist2_to_so, nearest_rotation, polar, PolarDecomposition};
pub use symmetric::{char_poly, det_expansion_check, sigma, sigma_all, sigma_grad};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Haar-distributed rotation from the QR factorization of a Gaussian matrix.
pub fn random_rotation<G: Rng + ?Sized>(rng: &mut G, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut c = q.column_mut(j);
            c.neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        let mut c = q.column_mut(0);
        c.neg_mut();
    }
    q
}

/// Errors unless `RᵗR = I` within `tol` and `det R > 0`.
pub fn check_rotation(r: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = r.nrows();
    if r.ncols() != n {
        return Err(Error::NotRotation(format!("{}x{} not square", n, r.ncols())));
    }
    let resid = (r.transpose() * r - DMatrix::identity(n, n)).amax();
    if !(resid <= tol) {
        return Err(Error::NotRotation(format!("|RᵗR - I| = {resid:e}")));
    }
    let det = r.determinant();
    if det <= 0.0 {
        return Err(Error::NotRotation(format!("det = {det}")));
    }
    Ok(())
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(s as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidArgument("ragged or empty matrix".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// `n×n` matrix with columns `cols[0..n-1]` followed by `last`, then its determinant.
pub(crate) fn det_with_last(cols: &DMatrix<f64>, last: &DVector<f64>) -> f64 {
    let n = last.len();
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (n, n - 1)).copy_from(cols);
    m.set_column(n - 1, last);
    m.determinant()
}
