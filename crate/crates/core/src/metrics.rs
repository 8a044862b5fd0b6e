//! Adaptive-filter quality metrics.
//!
//! Every rotation-invariant estimate used here has a flat tail, so it is
//! handled as `s I + V diag(l - s) V^H` with `V` the leading eigenvectors
//! whose eigenvalues differ from the floor `s`. The true covariance has the
//! same form. Quadratic forms against a batch of steering vectors then cost
//! `O(p (r + k) m)` instead of `O(p^2 m)`.

use std::io::Write;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::eigen::{adjoint_mul, compose, hermitian_part, mul};
use crate::rmt::{eigh, eigvalsh, Spectral};
use crate::scenario::{steering_matrix, steering_vector, SteeringSpec, TrueCovariance};
use crate::shrinkage::{cosine2, CovarianceEstimate, SpikedModel};

/// Eigenvalues closer than this (relative) to the floor count as floor.
const FLOOR_TOL: f64 = 1e-12;

struct LowRank<'a> {
    floor: f64,
    values: &'a [f64],
    basis: MatRef<'a, c64>,
}

fn low_rank<E: Spectral + ?Sized>(estimate: &E) -> Result<LowRank<'_>> {
    let spectrum = estimate.spectrum();
    let floor = *spectrum.last().ok_or(Error::InvalidArgument("empty spectrum".into()))?;
    if !(floor > 0.0) {
        return Err(Error::NotPositiveDefinite(floor));
    }
    let k = spectrum.iter().take_while(|&&l| (l - floor).abs() > FLOOR_TOL * floor).count();
    Ok(LowRank {
        floor,
        values: &spectrum[..k],
        basis: estimate.basis().subcols(0, k),
    })
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Normalised SCNR of the filter `estimate^{-1} y` against the true covariance:
///
/// ```text
/// rho = (y^H E^{-1} y)^2 / ((y^H R^{-1} y) (y^H E^{-1} R E^{-1} y))
/// ```
pub fn normalized_scnr<E: Spectral + ?Sized>(estimate: &E, truth: &TrueCovariance, target: &SteeringSpec) -> Result<f64> {
    let batch = SteeringBatch::new(truth, steering_matrix(std::slice::from_ref(target)))?;
    Ok(batch.rho(estimate)?[0])
}

/// Steering vectors paired with a true covariance, with the parts that do not
/// depend on the estimate precomputed.
pub struct SteeringBatch<'a> {
    truth: &'a TrueCovariance,
    vectors: Mat<c64>,
    norms2: Vec<f64>,
    truth_coeffs: Mat<c64>,
    truth_inverse_forms: Vec<f64>,
}

impl<'a> SteeringBatch<'a> {
    pub fn new(truth: &'a TrueCovariance, vectors: Mat<c64>) -> Result<Self> {
        check_dim(truth.p(), vectors.nrows())?;
        let m = vectors.ncols();
        let norms2: Vec<f64> = (0..m).map(|j| vectors.col(j).iter().map(|v| v.norm_sqr()).sum()).collect();
        let truth_coeffs = adjoint_mul(truth.basis(), vectors.as_ref());
        let s2 = truth.sigma2();
        let truth_inverse_forms = (0..m)
            .map(|j| {
                norms2[j] / s2
                    + truth
                        .spikes()
                        .iter()
                        .enumerate()
                        .map(|(i, l)| truth_coeffs[(i, j)].norm_sqr() * (1.0 / l - 1.0 / s2))
                        .sum::<f64>()
            })
            .collect();
        Ok(Self {
            truth,
            vectors,
            norms2,
            truth_coeffs,
            truth_inverse_forms,
        })
    }

    pub fn from_specs(truth: &'a TrueCovariance, specs: &[SteeringSpec]) -> Result<Self> {
        Self::new(truth, steering_matrix(specs))
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y^H R^{-1} y` per vector.
    pub fn truth_inverse_forms(&self) -> &[f64] {
        &self.truth_inverse_forms
    }

    /// `y^H E^{-1} y` per vector.
    pub fn inverse_forms<E: Spectral + ?Sized>(&self, estimate: &E) -> Result<Vec<f64>> {
        let lr = low_rank(estimate)?;
        check_dim(self.truth.p(), lr.basis.nrows())?;
        let c = adjoint_mul(lr.basis, self.vectors.as_ref());
        Ok((0..self.len())
            .map(|j| {
                self.norms2[j] / lr.floor
                    + lr.values
                        .iter()
                        .enumerate()
                        .map(|(i, l)| c[(i, j)].norm_sqr() * (1.0 / l - 1.0 / lr.floor))
                        .sum::<f64>()
            })
            .collect())
    }

    /// Normalised SCNR per vector.
    pub fn rho<E: Spectral + ?Sized>(&self, estimate: &E) -> Result<Vec<f64>> {
        let lr = low_rank(estimate)?;
        check_dim(self.truth.p(), lr.basis.nrows())?;
        if let Some(bad) = lr.values.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite(*bad));
        }
        let s = lr.floor;
        let k = lr.values.len();
        let c = adjoint_mul(lr.basis, self.vectors.as_ref());
        let cross = adjoint_mul(self.truth.basis(), lr.basis);
        let d: Vec<f64> = lr.values.iter().map(|l| 1.0 / l - 1.0 / s).collect();
        let dc = Mat::from_fn(k, self.len(), |i, j| c[(i, j)] * d[i]);
        // U^H w = U^H y / s + (U^H V) diag(d) C
        let mut uw = Mat::from_fn(self.truth.rank(), self.len(), |i, j| self.truth_coeffs[(i, j)] / s);
        faer::linalg::matmul::matmul(
            uw.as_mut(),
            faer::Accum::Add,
            cross.as_ref(),
            dc.as_ref(),
            c64::new(1.0, 0.0),
            faer::Par::Seq,
        );
        let s2 = self.truth.sigma2();
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.len() {
            let mut a = self.norms2[j] / s;
            let mut w2 = self.norms2[j] / (s * s);
            for (i, l) in lr.values.iter().enumerate() {
                let c2 = c[(i, j)].norm_sqr();
                a += c2 * d[i];
                w2 += c2 * (1.0 / (l * l) - 1.0 / (s * s));
            }
            let mut wrw = s2 * w2;
            for (i, l) in self.truth.spikes().iter().enumerate() {
                wrw += (l - s2) * uw[(i, j)].norm_sqr();
            }
            out.push(a * a / (self.truth_inverse_forms[j] * wrw));
        }
        Ok(out)
    }

    /// `E_est / E_true` of the MVDR error variance, i.e.
    /// `(y^H R^{-1} y) / (y^H E^{-1} y)` per vector.
    pub fn mvdr_ratio<E: Spectral + ?Sized>(&self, estimate: &E) -> Result<Vec<f64>> {
        Ok(self
            .inverse_forms(estimate)?
            .iter()
            .zip(&self.truth_inverse_forms)
            .map(|(e, t)| t / e)
            .collect())
    }
}

/// Lower bound on the normalised SCNR from the condition number of the
/// whitened error matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScnrBound {
    pub kappa: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScnrReport {
    pub rho: f64,
    pub lower_bound: f64,
    pub kappa: f64,
}

/// `4 kappa / (kappa + 1)^2`.
pub fn bound_from_kappa(kappa: f64) -> f64 {
    4.0 * kappa / ((kappa + 1.0) * (kappa + 1.0))
}

/// Roots `nu_-`, `nu_+` of `nu^2 - T nu + D` for a true whitened spike
/// `ell` and an estimated whitened eigenvalue `eta`.
pub fn pivot_roots(ell: f64, eta: f64, gamma: f64) -> Result<(f64, f64)> {
    let c2 = cosine2(ell, gamma);
    let s2 = 1.0 - c2;
    let d = eta / ell;
    let t = (s2 + eta * c2) / ell + c2 + eta * s2;
    let mut disc = t * t / 4.0 - d;
    if disc < 0.0 {
        if disc < -1e-12 {
            return Err(Error::ComplexPivot(disc));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    Ok((t / 2.0 - root, t / 2.0 + root))
}

/// Condition-number bound for an estimate against a known spiked truth.
/// Spike `i` of the truth is paired with the `i`-th estimated eigenvalue in
/// whitened units, or with the floor when the estimate has fewer spikes.
pub fn kantorovich_bound(truth: &SpikedModel, estimate: &CovarianceEstimate, gamma: f64) -> Result<ScnrBound> {
    let etas = estimate.whitened_spikes();
    let mut hi = 1.0f64;
    let mut lo = 1.0f64;
    for (i, ell) in truth.whitened_spikes().into_iter().enumerate() {
        let eta = etas.get(i).copied().unwrap_or(1.0);
        let (minus, plus) = pivot_roots(ell, eta, gamma)?;
        hi = hi.max(plus);
        lo = lo.min(minus);
    }
    let kappa = hi / lo;
    Ok(ScnrBound {
        kappa,
        lower_bound: bound_from_kappa(kappa),
    })
}

/// Exact condition number of `R^{-1/2} E R^{-1/2}` for one realisation.
///
/// Both matrices act as scalars off the joint span of their low-rank parts,
/// so the non-trivial spectrum is that of the pencil `(Q^H E Q, Q^H R Q)`
/// with `Q` an orthonormal basis of `[U V]`.
pub fn realized_kappa<E: Spectral + ?Sized>(truth: &TrueCovariance, estimate: &E) -> Result<ScnrBound> {
    let lr = low_rank(estimate)?;
    let p = truth.p();
    check_dim(p, lr.basis.nrows())?;
    let (r, k) = (truth.rank(), lr.values.len());
    let m = (r + k).min(p);
    let s = lr.floor;
    let s2 = truth.sigma2();
    let mut values = Vec::with_capacity(m + 1);
    if m > 0 {
        let q = if r + k >= p {
            Mat::<c64>::identity(p, p)
        } else {
            let joint = Mat::<c64>::from_fn(p, r + k, |i, j| {
                if j < r {
                    truth.basis()[(i, j)]
                } else {
                    lr.basis[(i, j - r)]
                }
            });
            joint.qr().compute_thin_Q()
        };
        let qu = adjoint_mul(q.as_ref(), truth.basis());
        let qv = adjoint_mul(q.as_ref(), lr.basis);
        let mut a = compose(qu.as_ref(), &truth.spikes().iter().map(|l| l - s2).collect::<Vec<_>>());
        let mut b = compose(qv.as_ref(), &lr.values.iter().map(|l| l - s).collect::<Vec<_>>());
        for i in 0..m {
            a[(i, i)] += c64::new(s2, 0.0);
            b[(i, i)] += c64::new(s, 0.0);
        }
        let ad = eigh(a.as_ref())?;
        let low = ad.min_eigenvalue();
        if !(low > 0.0) {
            return Err(Error::NotPositiveDefinite(low));
        }
        let inv_root: Vec<f64> = ad.eigenvalues().iter().map(|l| l.sqrt().recip()).collect();
        let w = compose(ad.eigenvectors(), &inv_root);
        let whitened = mul(mul(w.as_ref(), b.as_ref()).as_ref(), w.as_ref());
        values.extend(eigvalsh(hermitian_part(whitened.as_ref()).as_ref())?);
    }
    if m < p {
        values.push(s / s2);
    }
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite(lo));
    }
    let kappa = hi / lo;
    Ok(ScnrBound {
        kappa,
        lower_bound: bound_from_kappa(kappa),
    })
}

pub fn scnr_report(
    estimate: &CovarianceEstimate,
    truth: &TrueCovariance,
    target: &SteeringSpec,
    gamma: f64,
) -> Result<ScnrReport> {
    let rho = normalized_scnr(estimate, truth, target)?;
    let bound = kantorovich_bound(&truth.spiked_model()?, estimate, gamma)?;
    Ok(ScnrReport {
        rho,
        lower_bound: bound.lower_bound,
        kappa: bound.kappa,
    })
}

/// `1 / |s^H M^{-1} s|` for a dense positive-definite `M`.
pub fn mvdr_error_variance(m: MatRef<'_, c64>, target: &SteeringSpec) -> Result<f64> {
    check_dim(m.nrows(), target.dim())?;
    let decomp = eigh(m)?;
    let low = decomp.min_eigenvalue();
    if !(low > 0.0) {
        return Err(Error::NotPositiveDefinite(low));
    }
    Ok(1.0 / decomp.inverse_quadratic_form(&steering_vector(target)).abs())
}

/// Stein loss `tr(R^{-1} E - I) - log det(R^{-1} E)` for dense
/// positive-definite matrices.
pub fn stein_loss(truth: MatRef<'_, c64>, estimate: MatRef<'_, c64>) -> Result<f64> {
    check_dim(truth.nrows(), estimate.nrows())?;
    let t = eigh(truth)?;
    let low = t.min_eigenvalue();
    if !(low > 0.0) {
        return Err(Error::NotPositiveDefinite(low));
    }
    let inv_root: Vec<f64> = t.eigenvalues().iter().map(|l| l.sqrt().recip()).collect();
    let w = compose(t.eigenvectors(), &inv_root);
    let a = mul(mul(w.as_ref(), estimate).as_ref(), w.as_ref());
    let mu = eigvalsh(hermitian_part(a.as_ref()).as_ref())?;
    if let Some(bad) = mu.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite(*bad));
    }
    Ok(mu.iter().map(|v| v - 1.0 - v.ln()).sum::<f64>().max(0.0))
}

/// Stein loss of a flat-tailed estimate against a spiked truth, in
/// `O(p (r + k))`.
pub fn stein_loss_spectral<E: Spectral + ?Sized>(truth: &TrueCovariance, estimate: &E) -> Result<f64> {
    let lr = low_rank(estimate)?;
    let p = truth.p();
    check_dim(p, lr.basis.nrows())?;
    let s = lr.floor;
    let s2 = truth.sigma2();
    let e: Vec<f64> = lr.values.iter().map(|l| l - s).collect();
    let d: Vec<f64> = truth.spikes().iter().map(|l| 1.0 / l - 1.0 / s2).collect();
    let cross = adjoint_mul(truth.basis(), lr.basis);
    let mut trace = (p as f64 * s + e.iter().sum::<f64>()) / s2 + s * d.iter().sum::<f64>();
    for (i, di) in d.iter().enumerate() {
        for (j, ej) in e.iter().enumerate() {
            trace += di * ej * cross[(i, j)].norm_sqr();
        }
    }
    if let Some(bad) = lr.values.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite(*bad));
    }
    let k = lr.values.len();
    let r = truth.rank();
    let logdet_est = lr.values.iter().map(|l| l.ln()).sum::<f64>() + (p - k) as f64 * s.ln();
    let logdet_truth = truth.spikes().iter().map(|l| l.ln()).sum::<f64>() + (p - r) as f64 * s2.ln();
    Ok((trace - p as f64 - (logdet_est - logdet_truth)).max(0.0))
}

/// One CSV row of per-estimate metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub estimator: String,
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub bound: f64,
    pub mvdr_ratio: f64,
    pub stein_loss: f64,
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["scenario", "estimator", "n", "gamma", "rho", "bound", "mvdr_ratio", "stein_loss"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
