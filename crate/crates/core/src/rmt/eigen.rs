//! Hermitian eigendecomposition and spectral helpers shared by every
//! rotation-invariant estimator in the crate.

use std::sync::Arc;

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored column-wise. Eigenvectors sit behind an `Arc` so that estimators
/// sharing them with the sample decomposition do not copy `p x p` data.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Arc<Mat<c64>>,
}

impl EigenDecomposition {
    /// Builds a decomposition from parts. Eigenvalues must be descending and
    /// match the column count of `eigenvectors`.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: Arc<Mat<c64>>) -> Result<Self> {
        let p = eigenvalues.len();
        if eigenvectors.nrows() != p || eigenvectors.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: eigenvectors.ncols(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be sorted in descending order".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, c64> {
        Mat::as_ref(&self.eigenvectors)
    }

    pub fn shared_eigenvectors(&self) -> Arc<Mat<c64>> {
        Arc::clone(&self.eigenvectors)
    }

    /// `sum_i lambda_i v_i v_i^H`.
    pub fn reconstruct(&self) -> Mat<c64> {
        compose(self.eigenvectors(), &self.eigenvalues)
    }
}

/// A covariance held in spectral form `V diag(lambda) V^H`.
pub trait Spectral {
    fn spectrum(&self) -> &[f64];
    fn basis(&self) -> MatRef<'_, c64>;

    fn dim(&self) -> usize {
        self.spectrum().len()
    }

    /// `M^power y` evaluated through the eigenbasis.
    fn apply_power(&self, y: &[c64], power: f64) -> Vec<c64> {
        let v = self.basis();
        let coeffs = project(v, y);
        let scaled: Vec<c64> = coeffs
            .iter()
            .zip(self.spectrum())
            .map(|(c, &l)| c * l.powf(power))
            .collect();
        expand(v, &scaled)
    }

    /// `y^H M^{-1} y`.
    fn inverse_quadratic_form(&self, y: &[c64]) -> f64 {
        project(self.basis(), y)
            .iter()
            .zip(self.spectrum())
            .map(|(c, &l)| c.norm_sqr() / l)
            .sum()
    }

    /// `y^H M y`.
    fn quadratic_form(&self, y: &[c64]) -> f64 {
        project(self.basis(), y)
            .iter()
            .zip(self.spectrum())
            .map(|(c, &l)| c.norm_sqr() * l)
            .sum()
    }

    fn to_dense(&self) -> Mat<c64> {
        compose(self.basis(), self.spectrum())
    }

    fn min_eigenvalue(&self) -> f64 {
        self.spectrum().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Spectral for EigenDecomposition {
    fn spectrum(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn basis(&self) -> MatRef<'_, c64> {
        self.eigenvectors()
    }
}

/// `V^H y`.
pub(crate) fn project(v: MatRef<'_, c64>, y: &[c64]) -> Vec<c64> {
    assert_eq!(v.nrows(), y.len(), "vector length must match basis rows");
    (0..v.ncols())
        .map(|j| {
            let col = v.col(j);
            let mut acc = c64::new(0.0, 0.0);
            for (i, yi) in y.iter().enumerate() {
                acc += col[i].conj() * yi;
            }
            acc
        })
        .collect()
}

/// `V c`.
pub(crate) fn expand(v: MatRef<'_, c64>, coeffs: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); v.nrows()];
    for (j, c) in coeffs.iter().enumerate() {
        if *c == c64::new(0.0, 0.0) {
            continue;
        }
        let col = v.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * c;
        }
    }
    out
}

/// `V diag(d) V^H`.
pub(crate) fn compose(v: MatRef<'_, c64>, d: &[f64]) -> Mat<c64> {
    let p = v.nrows();
    let scaled = Mat::<c64>::from_fn(p, d.len(), |i, j| v[(i, j)] * d[j]);
    let mut out = Mat::<c64>::zeros(p, p);
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        scaled.as_ref(),
        v.adjoint(),
        c64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    hermitian_part(out.as_ref())
}

/// `A B`.
pub(crate) fn mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        a,
        b,
        c64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    out
}

/// `A^H B`.
pub(crate) fn adjoint_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.ncols(), b.ncols());
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        a.adjoint(),
        b,
        c64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    out
}

/// `A B^H`.
pub(crate) fn mul_adjoint(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), b.nrows());
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        a,
        b.adjoint(),
        c64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    out
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: MatRef<'_, c64>) -> Mat<c64> {
    Mat::<c64>::from_fn(a.nrows(), a.ncols(), |i, j| {
        (a[(i, j)] + a[(j, i)].conj()) * 0.5
    })
}

fn check_square_finite(a: MatRef<'_, c64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let p = a.nrows();
    let mut max_abs = 0.0f64;
    let mut max_skew = 0.0f64;
    for j in 0..p {
        for i in 0..p {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidMatrix("non-finite entry".into()));
            }
            max_abs = max_abs.max(z.norm());
            max_skew = max_skew.max((z - a[(j, i)].conj()).norm());
        }
    }
    if max_skew > 1e-6 * max_abs.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidMatrix(format!(
            "not Hermitian (relative skew {:.3e})",
            max_skew / max_abs
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// The input is symmetrised as `(A + A^H)/2` before factoring.
pub fn eigh(a: MatRef<'_, c64>) -> Result<EigenDecomposition> {
    check_square_finite(a)?;
    let p = a.nrows();
    if p == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: Arc::new(Mat::zeros(0, 0)),
        });
    }
    let sym = hermitian_part(a);
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order.
    let eigenvalues: Vec<f64> = (0..p).rev().map(|i| s[i].re).collect();
    let eigenvectors = Mat::<c64>::from_fn(p, p, |i, j| u[(i, p - 1 - j)]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: Arc::new(eigenvectors),
    })
}

/// Eigenvalues only, descending.
pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    check_square_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let sym = hermitian_part(a);
    let mut vals = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    vals.reverse();
    Ok(vals)
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn eigvalsh_real(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidMatrix("expected a square matrix".into()));
    }
    if (0..a.ncols()).any(|j| (0..a.nrows()).any(|i| !a[(i, j)].is_finite())) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let sym = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut vals = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    vals.reverse();
    Ok(vals)
}

/// Largest entry modulus.
pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}
