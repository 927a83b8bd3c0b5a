//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One draw of a standard circularly-symmetric complex Gaussian, CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a Hermitian matrix (the input is symmetrized first).
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let h = hermitian_part(a);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    eig.eigenvalues.iter().copied().collect()
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm2(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)
        .into_iter()
        .fold(0.0, |acc: f64, l| acc.max(l.abs()))
}

/// Relative ridge used before inverting interference-plus-noise matrices.
pub const RIDGE: f64 = 1e-12;

/// `log2 |I + E^H Psi^{-1} E|` for Hermitian PSD `psi`.
///
/// `psi` is symmetrized and regularised by `RIDGE * (tr(psi)/n) * I` before a
/// Cholesky solve; the outer determinant also goes through Cholesky.
pub fn log2_det_sinr(e: &CMat, psi: &CMat) -> Result<f64> {
    let n = psi.nrows();
    if psi.ncols() != n || e.nrows() != n {
        return Err(Error::Dimension(format!(
            "psi is {}x{}, e is {}x{}",
            psi.nrows(),
            psi.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    let mut reg = hermitian_part(psi);
    let scale = (reg.trace().re / n as f64).abs();
    let ridge = RIDGE * if scale > 0.0 { scale } else { 1.0 };
    for i in 0..n {
        reg[(i, i)] += ridge;
    }
    let chol = reg.cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "interference-plus-noise matrix not positive definite after ridge {ridge:e} (trace {:e})",
            psi.trace().re
        ))
    })?;
    let x = chol
        .l()
        .solve_lower_triangular(e)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let mut m = x.adjoint() * &x;
    for i in 0..m.nrows() {
        m[(i, i)] += C_ONE;
    }
    let m = hermitian_part(&m);
    let outer = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + E^H Psi^-1 E not positive definite".into()))?;
    let l = outer.l();
    let ln_det: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    Ok(ln_det / std::f64::consts::LN_2)
}
