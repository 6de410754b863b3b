//! Small dense complex helpers built on nalgebra: Hermitian eigen-solves,
//! PSD square roots and log-determinants of `I + A` for Hermitian PSD `A`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Relative negativity tolerated before a spectrum is declared indefinite.
pub const PSD_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

pub fn to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entry-wise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order
/// (eigenvectors permuted along). The input is symmetrized first.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "eigen-solve needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let h = hermitian_part(a);
    let eig = SymmetricEigen::try_new(h.clone(), EIG_EPS, EIG_MAX_ITER).ok_or_else(|| {
        let norm = h.norm();
        let diag_min = (0..n).map(|i| h[(i, i)].re).fold(f64::INFINITY, f64::min);
        Error::regime(format!(
            "Hermitian eigen-solver failed on {n}x{n} matrix (Frobenius norm {norm:e}, min diagonal {diag_min:e})"
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Clips tiny negative eigenvalues of a PSD matrix to zero. Anything below
/// `-PSD_TOL * max(|λ|)` is reported as an indefinite matrix.
pub fn clip_psd(values: &mut [f64], what: &str) -> Result<()> {
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_TOL * scale {
                return Err(Error::invalid(format!(
                    "{what} is not positive semi-definite (eigenvalue {v:e}, spectral scale {scale:e})"
                )));
            }
            if *v < -f64::EPSILON * scale * 64.0 {
                log::warn!("{what}: clipping eigenvalue {v:e} to zero");
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Square root of a Hermitian PSD matrix, `V diag(sqrt(λ)) V^H`.
pub fn sqrt_psd(a: &CMat, what: &str) -> Result<CMat> {
    let (mut values, vectors) = hermitian_eigen(a)?;
    clip_psd(&mut values, what)?;
    let n = a.nrows();
    let mut scaled = vectors.clone();
    for (c, v) in values.iter().enumerate() {
        let s = v.sqrt();
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    Ok(hermitian_part(&(scaled * vectors.adjoint())))
}

/// `log det(I + A)` for Hermitian PSD `A`, via a Cholesky factorization.
/// One retry on the explicitly symmetrized matrix before giving up.
pub fn log_det_identity_plus(a: &CMat) -> Result<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let chol = match m.clone().cholesky() {
        Some(c) => c,
        None => hermitian_part(&m).cholesky().ok_or_else(|| {
            Error::regime(format!("Cholesky factorization of I + A failed ({n}x{n})"))
        })?,
    };
    let l = chol.l_dirty();
    Ok(2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}
