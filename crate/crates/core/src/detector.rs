//! Low-rank adaptive normalised matched filter.
//!
//! The clutter subspace is spanned by the leading `r` sample eigenvectors and
//! projected out with `P = I - V_r V_r^H`. The statistic
//!
//! ```text
//! T = 2 |s^H P y|^2 / (sigma2_hat ||P s||^2)
//! ```
//!
//! is whitened by the estimated noise power so that it is asymptotically
//! chi-squared with two real degrees of freedom under the null, i.e.
//! `T / 2 ~ Exp(1)`. With `delta = -ln(p_fa)` the detector declares a target
//! when `T > 2 delta`.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::rmt::eigen::{expand, project};
use crate::rmt::{eigh, sample_covariance, AspectRatio, EigenDecomposition};
use crate::scenario::{steering_vector, DataCube, SteeringSpec};
use crate::shrinkage::{cosine2, estimate_noise, NoiseEstimate, SpikedModel};

/// Relative size of the last series term kept in [`pd_from_noncentrality`].
const SERIES_TOL: f64 = 1e-12;
const SERIES_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub rank: usize,
    pub p_fa: f64,
    pub noise: NoiseEstimate,
}

impl DetectorConfig {
    pub fn new(rank: usize, p_fa: f64, noise: NoiseEstimate) -> Result<Self> {
        threshold_for_pfa(p_fa)?;
        Ok(Self { rank, p_fa, noise })
    }

    pub fn delta(&self) -> f64 {
        -self.p_fa.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Whitened statistic `T`.
    pub statistic: f64,
    /// `|s^H P y|^2 / ||P s||^2` without whitening.
    pub raw_statistic: f64,
    /// Decision threshold on the scale of `statistic`, `2 delta`.
    pub threshold: f64,
    /// `-ln(p_fa)`.
    pub delta: f64,
    pub decision: bool,
    pub rank: usize,
    pub theoretical_pfa: f64,
    pub theoretical_pd: Option<f64>,
}

/// `delta = -ln(p_fa)`.
pub fn threshold_for_pfa(p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument(format!("false-alarm probability must lie in (0, 1), got {p_fa}")));
    }
    Ok(-p_fa.ln())
}

/// Dense projector `I - V_r V_r^H`.
pub fn clutter_projection(decomp: &EigenDecomposition, rank: usize) -> Result<Mat<c64>> {
    let p = decomp.dim();
    let proj = Projector::new(decomp.eigenvectors(), rank)?;
    let v = proj.basis;
    let mut out = Mat::<c64>::identity(p, p);
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Add,
        v,
        v.adjoint(),
        c64::new(-1.0, 0.0),
        faer::Par::Seq,
    );
    Ok(out)
}

/// `I - V_r V_r^H` applied without forming it.
#[derive(Debug, Clone, Copy)]
pub struct Projector<'a> {
    basis: MatRef<'a, c64>,
}

impl<'a> Projector<'a> {
    pub fn new(eigenvectors: MatRef<'a, c64>, rank: usize) -> Result<Self> {
        let p = eigenvectors.nrows();
        if rank >= p {
            return Err(Error::InvalidArgument(format!("projection rank {rank} must be below the dimension {p}")));
        }
        Ok(Self {
            basis: eigenvectors.subcols(0, rank),
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn apply(&self, y: &[c64]) -> Vec<c64> {
        if self.rank() == 0 {
            return y.to_vec();
        }
        let back = expand(self.basis, &project(self.basis, y));
        y.iter().zip(back).map(|(a, b)| a - b).collect()
    }
}

/// Whitened and raw statistics for a snapshot `y` and steering vector `s`.
pub fn statistic_pair(y: &[c64], s: &[c64], proj: &Projector<'_>, sigma2_hat: f64) -> Result<(f64, f64)> {
    let ps = proj.apply(s);
    let norm2: f64 = ps.iter().map(|v| v.norm_sqr()).sum();
    let s2: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if !(norm2 > 1e-12 * s2) {
        return Err(Error::TargetInClutterSubspace);
    }
    // s^H P y = (P s)^H y since P is a Hermitian projector.
    let inner: c64 = ps.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let raw = inner.norm_sqr() / norm2;
    Ok((2.0 * raw / sigma2_hat, raw))
}

/// `T = 2 |s^H P y|^2 / (sigma2_hat ||P s||^2)` with a dense projector.
pub fn test_statistic(y: &[c64], target: &SteeringSpec, proj: MatRef<'_, c64>, noise: NoiseEstimate) -> Result<f64> {
    let s = steering_vector(target);
    if proj.nrows() != s.len() || y.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            found: y.len().min(proj.nrows()),
        });
    }
    let apply = |v: &[c64]| -> Vec<c64> {
        (0..proj.nrows())
            .map(|i| (0..proj.ncols()).map(|j| proj[(i, j)] * v[j]).sum())
            .collect()
    };
    let ps = apply(&s);
    let py = apply(y);
    let norm2: f64 = ps.iter().map(|v| v.norm_sqr()).sum();
    let s2: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if !(norm2 > 1e-12 * s2) {
        return Err(Error::TargetInClutterSubspace);
    }
    let inner: c64 = s.iter().zip(&py).map(|(a, b)| a.conj() * b).sum();
    Ok(2.0 * inner.norm_sqr() / (noise.sigma2_hat * norm2))
}

/// Noise-normalised `nu` of the asymptotic non-central law (unit noise
/// power). `basis` holds the true spike eigenvectors and `whitened` the
/// spikes over the noise floor.
pub fn detection_nu(s: &[c64], basis: MatRef<'_, c64>, whitened: &[f64], gamma: f64) -> f64 {
    let coeffs = project(basis, s);
    let s2: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let in_span: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let mut q = s2 - in_span;
    let mut excess = 0.0;
    for (c, &ell) in coeffs.iter().zip(whitened) {
        let leak = (1.0 - cosine2(ell, gamma)) * c.norm_sqr();
        q += leak;
        excess += (ell - 1.0) * leak;
    }
    1.0 / q + excess / (q * q)
}

/// Non-centrality `Delta = 2 |h|^2 / (sigma2 nu)`.
pub fn noncentrality(amplitude: c64, sigma2: f64, nu: f64) -> f64 {
    2.0 * amplitude.norm_sqr() / (sigma2 * nu)
}

/// `P(T > 2 delta)` for `T` non-central chi-squared with two degrees of
/// freedom and non-centrality `big_delta`:
/// `sum_k Pois(k; big_delta / 2) Q(k + 1, delta)`.
pub fn pd_from_noncentrality(big_delta: f64, delta: f64) -> Result<f64> {
    if !(big_delta >= 0.0 && big_delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid non-centrality {big_delta} or threshold {delta}"
        )));
    }
    let mean = 0.5 * big_delta;
    if mean == 0.0 {
        return Ok((-delta).exp());
    }
    let term = |k: usize| -> f64 {
        let kf = k as f64;
        let log_w = -mean + kf * mean.ln() - ln_gamma(kf + 1.0);
        log_w.exp() * gamma_ur(kf + 1.0, delta)
    };
    let mode = mean.floor() as usize;
    let mut sum = term(mode);
    let mut count = 1;
    let mut k = mode;
    while k > 0 {
        k -= 1;
        let t = term(k);
        sum += t;
        count += 1;
        if t < SERIES_TOL * sum || count >= SERIES_CAP {
            break;
        }
    }
    let mut k = mode;
    loop {
        k += 1;
        let t = term(k);
        sum += t;
        count += 1;
        if t < SERIES_TOL * sum {
            break;
        }
        if count >= SERIES_CAP {
            return Err(Error::NoConvergence);
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Asymptotic detection probability for a target of complex amplitude
/// `amplitude` against a spiked truth with eigenvectors `eigvecs_truth`.
pub fn theoretical_pd(
    model: &SpikedModel,
    target: &SteeringSpec,
    amplitude: c64,
    p_fa: f64,
    eigvecs_truth: MatRef<'_, c64>,
    gamma: f64,
) -> Result<f64> {
    let delta = threshold_for_pfa(p_fa)?;
    if eigvecs_truth.ncols() != model.rank() || eigvecs_truth.nrows() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: model.rank(),
            found: eigvecs_truth.ncols(),
        });
    }
    let edge = 1.0 + gamma.sqrt();
    let whitened = model.whitened_spikes();
    if let Some(&ell) = whitened.iter().find(|&&l| !(l > edge)) {
        return Err(Error::SubCriticalSpike { value: ell, edge });
    }
    let nu = detection_nu(&steering_vector(target), eigvecs_truth, &whitened, gamma);
    pd_from_noncentrality(noncentrality(amplitude, model.sigma2(), nu), delta)
}

/// Runs the detector on the first test snapshot of `cube`, training on its
/// training block.
pub fn detect(cube: &DataCube, target: &SteeringSpec, config: &DetectorConfig) -> Result<DetectionReport> {
    if cube.test.ncols() == 0 {
        return Err(Error::InvalidArgument("data cube has no test snapshot".into()));
    }
    let cov = sample_covariance(cube.training.as_ref())?;
    let decomp = eigh(cov.matrix())?;
    detect_with_basis(&cube.test_snapshot(0), target, decomp.eigenvectors(), config)
}

/// Detector on a given eigenvector basis; the eigenvalues play no role.
pub fn detect_with_basis(
    y: &[c64],
    target: &SteeringSpec,
    eigenvectors: MatRef<'_, c64>,
    config: &DetectorConfig,
) -> Result<DetectionReport> {
    let delta = threshold_for_pfa(config.p_fa)?;
    let proj = Projector::new(eigenvectors, config.rank)?;
    let (statistic, raw_statistic) = statistic_pair(y, &steering_vector(target), &proj, config.noise.sigma2_hat)?;
    let threshold = 2.0 * delta;
    Ok(DetectionReport {
        statistic,
        raw_statistic,
        threshold,
        delta,
        decision: statistic > threshold,
        rank: config.rank,
        theoretical_pfa: config.p_fa,
        theoretical_pd: None,
    })
}

/// Noise estimate and eigenvectors of a training block, as used by
/// [`detect`] callers that pick the rank from the data.
pub fn training_decomposition(training: MatRef<'_, c64>) -> Result<(EigenDecomposition, NoiseEstimate)> {
    let cov = sample_covariance(training)?;
    let ratio = AspectRatio::new(cov.dim(), cov.n_samples())?;
    let decomp = eigh(cov.matrix())?;
    let noise = estimate_noise(&decomp, ratio)?;
    Ok((decomp, noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_matrix, stream_rng};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn random_decomp(p: usize, seed: u64) -> EigenDecomposition {
        let x = complex_normal_matrix(&mut stream_rng(seed, "x", 0), p, 2 * p);
        let c = sample_covariance(x.as_ref()).unwrap();
        eigh(c.matrix()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let eye = EigenDecomposition::from_parts(vec![3.0, 2.0, 1.0], Arc::new(Mat::identity(3, 3))).unwrap();
        assert_eq!(clutter_projection(&eye, 0).unwrap(), Mat::<c64>::identity(3, 3));
        let p1 = clutter_projection(&eye, 1).unwrap();
        for i in 0..3 {
            assert_eq!(p1[(i, i)].re, if i == 0 { 0.0 } else { 1.0 });
        }
        assert!(clutter_projection(&eye, 3).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let d = random_decomp(32, 1);
        let p = clutter_projection(&d, 3).unwrap();
        let p2 = crate::rmt::eigen::mul(p.as_ref(), p.as_ref());
        let mut worst = 0.0f64;
        let mut trace = 0.0;
        for i in 0..32 {
            trace += p[(i, i)].re;
            for j in 0..32 {
                worst = worst.max((p2[(i, j)] - p[(i, j)]).norm());
                worst = worst.max((p[(i, j)] - p[(j, i)].conj()).norm());
            }
        }
        assert!(worst < 1e-10);
        assert!((trace - 29.0).abs() < 1e-10);
        let proj = Projector::new(d.eigenvectors(), 3).unwrap();
        for k in 0..3 {
            let v: Vec<c64> = d.eigenvectors().col(k).iter().copied().collect();
            assert!(proj.apply(&v).iter().all(|x| x.norm() < 1e-12));
        }
    }

    #[test]
    fn statistic_examples() {
        let spec = SteeringSpec::from_degrees(30.0, 0.2, 2, 4).unwrap();
        let s = steering_vector(&spec);
        let eye = Mat::<c64>::identity(8, 8);
        let noise = NoiseEstimate::known(1.0).unwrap();
        assert_relative_eq!(test_statistic(&s, &spec, eye.as_ref(), noise).unwrap(), 16.0, epsilon = 1e-12);

        let other = steering_vector(&SteeringSpec::from_degrees(30.0, -0.05, 2, 4).unwrap());
        let inner: c64 = s.iter().zip(&other).map(|(a, b)| a.conj() * b).sum();
        let orth: Vec<c64> = other.iter().zip(&s).map(|(o, si)| o - si * inner / 8.0).collect();
        assert!(test_statistic(&orth, &spec, eye.as_ref(), noise).unwrap() < 1e-20);
    }

    #[test]
    fn target_inside_clutter_subspace_is_rejected() {
        let spec = SteeringSpec::from_degrees(0.0, 0.0, 1, 2).unwrap();
        let s = steering_vector(&spec);
        let u = Mat::from_fn(2, 2, |i, j| {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            match j {
                0 => s[i] * h,
                _ => c64::new(if i == 0 { h } else { -h }, 0.0),
            }
        });
        let proj = Projector::new(u.as_ref(), 1).unwrap();
        assert!(matches!(
            statistic_pair(&s, &s, &proj, 1.0),
            Err(Error::TargetInClutterSubspace)
        ));
    }

    #[test]
    fn statistic_is_phase_invariant() {
        let d = random_decomp(12, 4);
        let spec = SteeringSpec::from_degrees(10.0, 0.1, 3, 4).unwrap();
        let s = steering_vector(&spec);
        let y: Vec<c64> = complex_normal_matrix(&mut stream_rng(2, "y", 0), 12, 1).col(0).iter().copied().collect();
        let proj = Projector::new(d.eigenvectors(), 2).unwrap();
        let base = statistic_pair(&y, &s, &proj, 1.3).unwrap().0;
        for phase in [0.3, 1.7, -2.9] {
            let rot = c64::cis(phase);
            let y2: Vec<c64> = y.iter().map(|v| v * rot).collect();
            let s2: Vec<c64> = s.iter().map(|v| v * rot.conj()).collect();
            assert_relative_eq!(statistic_pair(&y2, &s, &proj, 1.3).unwrap().0, base, max_relative = 1e-12);
            assert_relative_eq!(statistic_pair(&y, &s2, &proj, 1.3).unwrap().0, base, max_relative = 1e-12);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_relative_eq!(threshold_for_pfa((-1.0f64).exp()).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(threshold_for_pfa(0.01).unwrap(), 4.605170185988091, epsilon = 1e-12);
        assert_relative_eq!(threshold_for_pfa(1e-5).unwrap(), 11.512925464970229, epsilon = 1e-12);
        assert!(threshold_for_pfa(0.0).is_err());
        assert!(threshold_for_pfa(1.0).is_err());
    }

    #[test]
    fn pd_limits() {
        assert_relative_eq!(pd_from_noncentrality(0.0, 3.0).unwrap(), (-3.0f64).exp(), epsilon = 1e-15);
        assert!(pd_from_noncentrality(1e4, 3.0).unwrap() > 1.0 - 1e-9);
        let model = SpikedModel::new(16, 1.0, vec![]).unwrap();
        let spec = SteeringSpec::from_degrees(30.0, 0.2, 4, 4).unwrap();
        let none = Mat::<c64>::zeros(16, 0);
        let pd0 = theoretical_pd(&model, &spec, c64::new(0.0, 0.0), 0.01, none.as_ref(), 0.25).unwrap();
        assert_relative_eq!(pd0, 0.01, epsilon = 1e-14);
    }

    #[test]
    fn pd_matches_marcum_closed_form() {
        // P(T > 2 delta) for |sqrt(mu) + z|^2 with z ~ CN(0, 1), by quadrature
        // over the Rician density.
        for &(big_delta, delta) in &[(0.5, 2.0), (4.0, 4.6), (20.0, 4.6), (60.0, 11.5)] {
            let a = (big_delta / 2.0f64).sqrt();
            let b = (delta as f64).sqrt();
            let n = 200_000;
            let hi = a + b + 12.0;
            let h = (hi - b) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let r = b + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let x = 2.0 * a * r;
                // scaled Bessel I0(x) e^{-x} by its power series / asymptotic form
                let i0e = if x < 30.0 {
                    let mut term = 1.0;
                    let mut sum = 1.0;
                    for k in 1..200 {
                        term *= (x / 2.0) * (x / 2.0) / (k * k) as f64;
                        sum += term;
                    }
                    sum * (-x).exp()
                } else {
                    (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / (2.0 * std::f64::consts::PI * x).sqrt()
                };
                acc += w * 2.0 * r * (-(r - a) * (r - a)).exp() * i0e;
            }
            let expected = acc * h;
            let got = pd_from_noncentrality(big_delta, delta).unwrap();
            assert!((got - expected).abs() < 1e-6, "{big_delta}, {delta}: {got} vs {expected}");
        }
    }

    #[test]
    fn pd_is_monotone() {
        let mut last = 0.0;
        for i in 0..60 {
            let pd = pd_from_noncentrality(i as f64, 4.6).unwrap();
            assert!(pd >= last);
            last = pd;
        }
        let mut last = 0.0;
        for pfa in [1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let pd = pd_from_noncentrality(8.0, -f64::ln(pfa)).unwrap();
            assert!(pd >= last);
            last = pd;
        }
    }

    #[test]
    fn no_clutter_nu_is_inverse_norm() {
        let spec = SteeringSpec::from_degrees(-20.0, 0.3, 4, 8).unwrap();
        let s = steering_vector(&spec);
        let nu = detection_nu(&s, Mat::<c64>::zeros(32, 0).as_ref(), &[], 0.1);
        assert_relative_eq!(nu, 1.0 / 32.0, epsilon = 1e-15);
        assert_relative_eq!(noncentrality(c64::new(0.5, 0.0), 1.0, nu), 16.0, epsilon = 1e-12);
    }
}
