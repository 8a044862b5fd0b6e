//! Monte Carlo check of the asymptotic normality of shrunk spike
//! eigenvalues.
//!
//! For each trial a real Gaussian `p x n` block with covariance
//! `diag(ell_1, .., ell_r, 1, .., 1)` (whitened units) is drawn, the top `r`
//! sample eigenvalues are shrunk, and `sqrt(n) (eta(l_i) - eta(beta_i))` is
//! compared with `alpha_i eta'(beta_i) N(0, 1)` by a two-sample K-S test.
//! The covariance is diagonal without loss of generality since the sample
//! spectrum is rotation invariant.

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ks::{ks_two_sample, KsResult};
use crate::error::{Error, Result};
use crate::rmt::{eigvalsh_real, sample_covariance_real};
use crate::rng::{real_normal_matrix, stream_rng};
use crate::shrinkage::{clt_params, eta_star, CltParams, SpikedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeClt {
    /// Whitened population spike.
    pub spike: f64,
    pub params: CltParams,
    /// Mean of the shrunk eigenvalue across trials, whitened.
    pub mean_shrunk: f64,
    /// Mean and standard deviation of `sqrt(n) (eta(l) - eta(beta)) / (alpha eta')`.
    pub mean_standardized: f64,
    pub std_standardized: f64,
    pub ks: KsResult,
}

impl SpikeClt {
    pub fn relative_bias(&self) -> f64 {
        (self.mean_shrunk - self.params.eta_of_beta).abs() / self.params.eta_of_beta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub p: usize,
    pub n: usize,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
    pub spikes: Vec<SpikeClt>,
}

/// Sample count `n` with `p / n == gamma` exactly.
pub fn exact_sample_count(p: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("aspect ratio {gamma} outside (0, 1]")));
    }
    let n = (p as f64 / gamma).round() as usize;
    if n == 0 || (p as f64 / n as f64 - gamma).abs() > 1e-12 * gamma {
        return Err(Error::InvalidArgument(format!(
            "p = {p} / gamma = {gamma} is not an integer sample count"
        )));
    }
    Ok(n)
}

pub fn verify_clt(model: &SpikedModel, gamma: f64, p: usize, trials: usize, seed: u64) -> Result<CltReport> {
    if model.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: model.p(),
        });
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed".into()));
    }
    let n = exact_sample_count(p, gamma)?;
    let ells = model.whitened_spikes();
    let params = ells
        .iter()
        .map(|&ell| clt_params(ell, gamma))
        .collect::<Result<Vec<_>>>()?;
    let r = ells.len();
    let scale: Vec<f64> = model.full_spectrum().iter().map(|l| (l / model.sigma2()).sqrt()).collect();

    let draws: Vec<Result<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut z = real_normal_matrix(&mut stream_rng(seed, "training", t), p, n);
            for j in 0..n {
                for (i, s) in scale.iter().enumerate().take(r) {
                    z[(i, j)] *= s;
                }
            }
            let cov: Mat<f64> = sample_covariance_real(z.as_ref())?;
            let values = eigvalsh_real(cov.as_ref())?;
            Ok(values[..r].iter().map(|&l| eta_star(l, gamma)).collect())
        })
        .collect();
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;

    let root_n = (n as f64).sqrt();
    let mut spikes = Vec::with_capacity(r);
    for (i, (&ell, prm)) in ells.iter().zip(&params).enumerate() {
        let shrunk: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        let centred: Vec<f64> = shrunk.iter().map(|v| root_n * (v - prm.eta_of_beta)).collect();
        let sd = prm.shrunk_std();
        let mut rng = stream_rng(seed, "reference", i as u64);
        let reference: Vec<f64> = (0..trials).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let standardized: Vec<f64> = centred.iter().map(|v| v / sd).collect();
        let mean = standardized.iter().sum::<f64>() / trials as f64;
        let var = standardized.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        spikes.push(SpikeClt {
            spike: ell,
            params: *prm,
            mean_shrunk: shrunk.iter().sum::<f64>() / trials as f64,
            mean_standardized: mean,
            std_standardized: var.sqrt(),
            ks: ks_two_sample(&centred, &reference)?,
        });
    }
    Ok(CltReport {
        p,
        n,
        gamma,
        trials,
        seed,
        spikes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_must_be_exact() {
        assert_eq!(exact_sample_count(400, 0.2).unwrap(), 2000);
        assert!(exact_sample_count(401, 0.3).is_err());
        assert!(exact_sample_count(10, 0.0).is_err());
    }

    #[test]
    fn two_trials_give_a_defined_result() {
        let model = SpikedModel::new(20, 1.0, vec![6.0]).unwrap();
        let report = verify_clt(&model, 0.5, 20, 2, 3).unwrap();
        let ks = report.spikes[0].ks;
        assert_eq!((ks.n1, ks.n2), (2, 2));
        assert!((0.0..=1.0).contains(&ks.statistic) && (0.0..=1.0).contains(&ks.p_value));
    }

    #[test]
    fn sub_critical_spike_is_rejected() {
        let model = SpikedModel::new(20, 1.0, vec![1.3]).unwrap();
        assert!(matches!(
            verify_clt(&model, 0.5, 20, 4, 0),
            Err(Error::SubCriticalSpike { .. })
        ));
    }

    #[test]
    fn noise_level_does_not_matter() {
        let a = verify_clt(&SpikedModel::new(30, 1.0, vec![8.0]).unwrap(), 0.5, 30, 8, 5).unwrap();
        let b = verify_clt(&SpikedModel::new(30, 3.0, vec![24.0]).unwrap(), 0.5, 30, 8, 5).unwrap();
        assert!((a.spikes[0].mean_shrunk - b.spikes[0].mean_shrunk).abs() < 1e-12);
    }
}
