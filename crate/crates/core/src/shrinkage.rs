//! Nonlinear spectral shrinkage for spiked covariance models.
//!
//! Pipeline for a sample covariance with eigenvalues `l_i` and ratio
//! `gamma = p / n`:
//!
//! 1. noise power `sigma2_hat = median(l) / mp_median(gamma)`;
//! 2. whitened eigenvalues `x_i = l_i / sigma2_hat`;
//! 3. each `x_i` above the bulk edge `(1 + sqrt(gamma))^2` is mapped back to
//!    its population spike `f(x_i)` and shrunk with the Stein-loss shrinker,
//!    everything else collapses onto the noise floor;
//! 4. the estimate keeps the sample eigenvectors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::io::{write_matrix, MatrixHeader};
use crate::rmt::{median, AspectRatio, EigenDecomposition, MpLaw, Spectral};

/// Largest spike count, as a fraction of `p`, for which the spiked model is
/// considered to hold.
pub const SPIKE_FRACTION: f64 = 0.1;

/// Guard applied to the discriminant of [`f_map`].
const DISCRIMINANT_GUARD: f64 = 1e-12;

/// `floor(SPIKE_FRACTION * p)`.
pub fn spike_limit(p: usize) -> usize {
    (SPIKE_FRACTION * p as f64).floor() as usize
}

/// Population spectrum of a spiked covariance: `spikes` followed by
/// `p - r` copies of `sigma2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedModel {
    p: usize,
    sigma2: f64,
    spikes: Vec<f64>,
}

impl SpikedModel {
    pub fn new(p: usize, sigma2: f64, mut spikes: Vec<f64>) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power must be positive, got {sigma2}")));
        }
        if spikes.len() >= p {
            return Err(Error::InvalidArgument(format!(
                "spike count {} must be below the dimension {p}",
                spikes.len()
            )));
        }
        if let Some(bad) = spikes.iter().find(|&&s| !(s > sigma2) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spike {bad} is not above the noise floor {sigma2}"
            )));
        }
        spikes.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { p, sigma2, spikes })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn spikes(&self) -> &[f64] {
        &self.spikes
    }

    pub fn rank(&self) -> usize {
        self.spikes.len()
    }

    /// Spikes in units of the noise floor, `lambda_i / sigma2`.
    pub fn whitened_spikes(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s / self.sigma2).collect()
    }

    pub fn full_spectrum(&self) -> Vec<f64> {
        let mut v = self.spikes.clone();
        v.resize(self.p, self.sigma2);
        v
    }

    pub fn exceeds_spike_fraction(&self) -> bool {
        self.rank() > spike_limit(self.p)
    }
}

/// `sigma2_hat = lambda_med / mu_med`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma2_hat: f64,
    pub lambda_med: f64,
    pub mu_med: f64,
}

impl NoiseEstimate {
    pub fn from_medians(lambda_med: f64, mu_med: f64) -> Result<Self> {
        let sigma2_hat = lambda_med / mu_med;
        if !(sigma2_hat > 0.0 && sigma2_hat.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-positive noise estimate (median eigenvalue {lambda_med})"
            )));
        }
        Ok(Self {
            sigma2_hat,
            lambda_med,
            mu_med,
        })
    }

    /// A known noise power, bypassing the median estimator.
    pub fn known(sigma2: f64) -> Result<Self> {
        Self::from_medians(sigma2, 1.0)
    }
}

pub fn estimate_noise(decomp: &EigenDecomposition, ratio: AspectRatio) -> Result<NoiseEstimate> {
    estimate_noise_from_eigenvalues(decomp.eigenvalues(), ratio)
}

pub fn estimate_noise_from_eigenvalues(eigenvalues: &[f64], ratio: AspectRatio) -> Result<NoiseEstimate> {
    check_dims(eigenvalues.len(), ratio)?;
    let lambda_med = median(eigenvalues).ok_or(Error::NoTrainingSamples)?;
    NoiseEstimate::from_medians(lambda_med, MpLaw::from_ratio(ratio).median())
}

fn check_dims(len: usize, ratio: AspectRatio) -> Result<()> {
    if len != ratio.p() {
        return Err(Error::DimensionMismatch {
            expected: ratio.p(),
            found: len,
        });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// Maps a population spike (whitened) to the almost-sure limit of its sample
/// eigenvalue: `ell + gamma * ell / (ell - 1)` above `1 + sqrt(gamma)`, the
/// bulk edge `(1 + sqrt(gamma))^2` below it.
pub fn g_map(ell: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if ell < 1.0 {
        return Err(Error::BelowNoiseFloor(ell));
    }
    let edge = 1.0 + gamma.sqrt();
    if ell > edge {
        Ok(ell + gamma * ell / (ell - 1.0))
    } else {
        Ok(edge * edge)
    }
}

/// Inverse of [`g_map`] on `x > (1 + sqrt(gamma))^2`.
pub fn f_map(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let edge = (1.0 + gamma.sqrt()).powi(2);
    if !(x > edge) {
        return Err(Error::InsideBulk { value: x, edge });
    }
    let b = x + 1.0 - gamma;
    let mut disc = b * b - 4.0 * x;
    if disc < 0.0 && disc >= -DISCRIMINANT_GUARD {
        disc = 0.0;
    }
    Ok(0.5 * (b + disc.sqrt()))
}

/// Squared cosine between a population spike eigenvector and its sample
/// counterpart; zero at or below `1 + sqrt(gamma)`.
pub fn cosine2(ell: f64, gamma: f64) -> f64 {
    if !(ell > 1.0 + gamma.sqrt()) {
        return 0.0;
    }
    let u = ell - 1.0;
    ((1.0 - gamma / (u * u)) / (1.0 + gamma / u)).clamp(0.0, 1.0)
}

/// Optimal shrinker under Stein loss, `ell / (c^2 + s^2 ell)`.
pub fn stein_shrinker(ell: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let edge = 1.0 + gamma.sqrt();
    if !(ell > edge) {
        return Err(Error::InsideBulk { value: ell, edge });
    }
    let c2 = cosine2(ell, gamma);
    Ok(ell / (c2 + (1.0 - c2) * ell))
}

/// Full shrinker on whitened sample eigenvalues: `stein(f(x))` above the bulk
/// edge (strictly), `1` otherwise.
pub fn eta_star(x: f64, gamma: f64) -> f64 {
    let edge = (1.0 + gamma.sqrt()).powi(2);
    if x > edge {
        match f_map(x, gamma).and_then(|ell| stein_shrinker(ell, gamma)) {
            Ok(v) => v,
            // f(x) rounds onto the spike threshold just above the edge.
            Err(_) => 1.0,
        }
    } else {
        1.0
    }
}

/// `d/dx stein(f(x))` by the chain rule.
pub fn eta_star_derivative(x: f64, gamma: f64) -> Result<f64> {
    let ell = f_map(x, gamma)?;
    let b = x + 1.0 - gamma;
    let root = (b * b - 4.0 * x).max(0.0).sqrt();
    if root == 0.0 {
        return Err(Error::InsideBulk {
            value: x,
            edge: (1.0 + gamma.sqrt()).powi(2),
        });
    }
    let df = 0.5 * (1.0 + (x - 1.0 - gamma) / root);
    Ok(stein_derivative(ell, gamma) * df)
}

/// Central finite-difference fallback for [`eta_star_derivative`] with
/// relative step `1e-6`.
pub fn eta_star_derivative_fd(x: f64, gamma: f64) -> f64 {
    let h = 1e-6 * x;
    (eta_star(x + h, gamma) - eta_star(x - h, gamma)) / (2.0 * h)
}

fn stein_derivative(ell: f64, gamma: f64) -> f64 {
    let u = ell - 1.0;
    let den = u * (u + gamma);
    let c2 = (u * u - gamma) / den;
    let dc2 = (2.0 * u * den - (u * u - gamma) * (2.0 * u + gamma)) / (den * den);
    let d = ell - c2 * u;
    let dd = 1.0 - dc2 * u - c2;
    (d - ell * dd) / (d * d)
}

/// Asymptotic location and spread of a shrunk spike eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    /// Almost-sure limit of the sample eigenvalue.
    pub beta: f64,
    /// Asymptotic variance of `sqrt(n) (l - beta)` for real Gaussian data.
    pub alpha2: f64,
    pub eta_of_beta: f64,
    pub eta_prime: f64,
}

impl CltParams {
    /// Standard deviation of `sqrt(n) (eta(l) - eta(beta))`.
    pub fn shrunk_std(&self) -> f64 {
        self.alpha2.sqrt() * self.eta_prime.abs()
    }
}

pub fn clt_params(ell: f64, gamma: f64) -> Result<CltParams> {
    check_gamma(gamma)?;
    let edge = 1.0 + gamma.sqrt();
    if !(ell > edge) {
        return Err(Error::SubCriticalSpike { value: ell, edge });
    }
    let beta = ell + gamma * ell / (ell - 1.0);
    let alpha2 = 2.0 * ell * ell * (1.0 - gamma / (ell - 1.0).powi(2));
    Ok(CltParams {
        beta,
        alpha2,
        eta_of_beta: eta_star(beta, gamma),
        eta_prime: eta_star_derivative(beta, gamma)?,
    })
}

/// Non-fatal conditions raised during estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateWarning {
    /// More spikes than the spiked-model fraction allows.
    SpikeFractionExceeded { spike_count: usize, limit: usize },
}

impl std::fmt::Display for EstimateWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimateWarning::SpikeFractionExceeded { spike_count, limit } => write!(
                f,
                "{spike_count} spikes detected, above the spiked-model limit of {limit}"
            ),
        }
    }
}

/// Shrunk eigenvalues without eigenvectors; the O(p) part of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkSpectrum {
    pub eigenvalues: Vec<f64>,
    pub noise: NoiseEstimate,
    pub spike_count: usize,
    pub gamma: f64,
    pub warnings: Vec<EstimateWarning>,
}

/// Shrinks descending sample eigenvalues.
pub fn shrink_eigenvalues(eigenvalues: &[f64], ratio: AspectRatio) -> Result<ShrunkSpectrum> {
    let noise = estimate_noise_from_eigenvalues(eigenvalues, ratio)?;
    Ok(shrink_with_noise(eigenvalues, ratio, noise))
}

pub(crate) fn shrink_with_noise(eigenvalues: &[f64], ratio: AspectRatio, noise: NoiseEstimate) -> ShrunkSpectrum {
    let gamma = ratio.gamma();
    let edge = ratio.bulk_edge();
    let s2 = noise.sigma2_hat;
    let mut spike_count = 0;
    let shrunk: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| {
            let x = l / s2;
            if x > edge {
                spike_count += 1;
                s2 * eta_star(x, gamma)
            } else {
                s2
            }
        })
        .collect();
    let mut warnings = Vec::new();
    let limit = spike_limit(ratio.p());
    if spike_count > limit {
        warnings.push(EstimateWarning::SpikeFractionExceeded { spike_count, limit });
    }
    ShrunkSpectrum {
        eigenvalues: shrunk,
        noise,
        spike_count,
        gamma,
        warnings,
    }
}

/// Rotation-invariant covariance estimate: new eigenvalues on the sample
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    eigenvalues: Vec<f64>,
    eigenvectors: Arc<Mat<c64>>,
    noise: NoiseEstimate,
    spike_count: usize,
    gamma: Option<f64>,
    warnings: Vec<EstimateWarning>,
}

impl CovarianceEstimate {
    pub(crate) fn new(
        eigenvalues: Vec<f64>,
        eigenvectors: Arc<Mat<c64>>,
        noise: NoiseEstimate,
        spike_count: usize,
        gamma: Option<f64>,
        warnings: Vec<EstimateWarning>,
    ) -> Self {
        Self {
            eigenvalues,
            eigenvectors,
            noise,
            spike_count,
            gamma,
            warnings,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, c64> {
        Mat::as_ref(&self.eigenvectors)
    }

    pub fn shared_eigenvectors(&self) -> &Arc<Mat<c64>> {
        &self.eigenvectors
    }

    pub fn noise(&self) -> NoiseEstimate {
        self.noise
    }

    pub fn spike_count(&self) -> usize {
        self.spike_count
    }

    /// Aspect ratio used to build the estimate, when it depended on one.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn warnings(&self) -> &[EstimateWarning] {
        &self.warnings
    }

    /// Eigenvalues strictly above the noise floor.
    pub fn spiked_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.spike_count]
    }

    /// Whitened shrunk spikes `lambda_bar_i / sigma2_hat`.
    pub fn whitened_spikes(&self) -> Vec<f64> {
        self.spiked_eigenvalues()
            .iter()
            .map(|l| l / self.noise.sigma2_hat)
            .collect()
    }

    /// Writes the dense estimate as `<stem>.bin` with a `<stem>.json` sidecar.
    pub fn write(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let dense = self.to_dense();
        write_matrix(stem, dense.as_ref(), &MatrixHeader::new(dense.nrows(), dense.ncols()))
    }

    pub fn summary(&self) -> EstimateSummary {
        EstimateSummary {
            sigma2_hat: self.noise.sigma2_hat,
            spike_count: self.spike_count,
            spiked_eigenvalues: self.spiked_eigenvalues().to_vec(),
            gamma: self.gamma,
        }
    }
}

impl Spectral for CovarianceEstimate {
    fn spectrum(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn basis(&self) -> MatRef<'_, c64> {
        Mat::as_ref(&self.eigenvectors)
    }
}

/// JSON summary written next to a serialized estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub sigma2_hat: f64,
    pub spike_count: usize,
    pub spiked_eigenvalues: Vec<f64>,
    pub gamma: Option<f64>,
}

/// Applies the shrinker to a sample eigendecomposition.
pub fn shrink_spectrum(decomp: &EigenDecomposition, ratio: AspectRatio) -> Result<CovarianceEstimate> {
    let s = shrink_eigenvalues(decomp.eigenvalues(), ratio)?;
    Ok(CovarianceEstimate::new(
        s.eigenvalues,
        decomp.shared_eigenvectors(),
        s.noise,
        s.spike_count,
        Some(s.gamma),
        s.warnings,
    ))
}
