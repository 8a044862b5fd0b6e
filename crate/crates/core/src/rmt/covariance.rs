use faer::{c64, Mat, MatRef};

use super::mp::AspectRatio;
use crate::error::{Error, Result};

/// `(1/n) sum_k y_k y_k^H` over the columns of a `p x n` snapshot matrix.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    matrix: Mat<c64>,
    n_samples: usize,
}

impl SampleCovariance {
    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Fewer snapshots than dimensions: the matrix is singular and the
    /// shrinkage estimators will refuse it.
    pub fn is_sample_deficient(&self) -> bool {
        self.n_samples < self.dim()
    }

    pub fn aspect_ratio(&self) -> Result<AspectRatio> {
        AspectRatio::new(self.dim(), self.n_samples)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }
}

pub fn sample_covariance(data: MatRef<'_, c64>) -> Result<SampleCovariance> {
    let (p, n) = (data.nrows(), data.ncols());
    if n == 0 {
        return Err(Error::NoTrainingSamples);
    }
    for j in 0..n {
        for i in 0..p {
            let z = data[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidMatrix("non-finite snapshot entry".into()));
            }
        }
    }
    let mut gram = Mat::<c64>::zeros(p, p);
    faer::linalg::matmul::matmul(
        gram.as_mut(),
        faer::Accum::Replace,
        data,
        data.adjoint(),
        c64::new(1.0 / n as f64, 0.0),
        faer::Par::Seq,
    );
    Ok(SampleCovariance {
        matrix: super::eigen::hermitian_part(gram.as_ref()),
        n_samples: n,
    })
}

/// Real-valued counterpart used when snapshots are drawn from a real
/// Gaussian model.
pub fn sample_covariance_real(data: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (p, n) = (data.nrows(), data.ncols());
    if n == 0 {
        return Err(Error::NoTrainingSamples);
    }
    let mut gram = Mat::<f64>::zeros(p, p);
    faer::linalg::matmul::matmul(
        gram.as_mut(),
        faer::Accum::Replace,
        data,
        data.transpose(),
        1.0 / n as f64,
        faer::Par::Seq,
    );
    Ok(Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_is_rejected() {
        let data = Mat::<c64>::zeros(4, 0);
        assert!(matches!(
            sample_covariance(data.as_ref()),
            Err(Error::NoTrainingSamples)
        ));
    }

    #[test]
    fn single_column_is_rank_one() {
        let y = [
            c64::new(1.0, 0.0),
            c64::new(0.0, 1.0),
            c64::new(-1.0, 0.0),
            c64::new(0.0, -1.0),
        ];
        let data = Mat::<c64>::from_fn(4, 1, |i, _| y[i]);
        let s = sample_covariance(data.as_ref()).unwrap();
        assert!((s.trace() - 4.0).abs() < 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                assert!((s.matrix()[(i, j)] - y[i] * y[j].conj()).norm() < 1e-14);
            }
        }
        assert!(s.is_sample_deficient());
        assert!(s.aspect_ratio().is_err());
    }

    #[test]
    fn duplicated_column_averages_to_itself() {
        let y = [c64::new(1.0, 2.0), c64::new(-0.5, 0.25), c64::new(3.0, 0.0)];
        let one = Mat::<c64>::from_fn(3, 1, |i, _| y[i]);
        let two = Mat::<c64>::from_fn(3, 2, |i, _| y[i]);
        let a = sample_covariance(one.as_ref()).unwrap();
        let b = sample_covariance(two.as_ref()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.matrix()[(i, j)] - b.matrix()[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn non_finite_snapshot_is_rejected() {
        let mut data = Mat::<c64>::zeros(2, 2);
        data[(0, 1)] = c64::new(f64::INFINITY, 0.0);
        assert!(matches!(
            sample_covariance(data.as_ref()),
            Err(Error::InvalidMatrix(_))
        ));
    }
}
