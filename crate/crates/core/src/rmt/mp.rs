//! Marchenko–Pastur law for white sample covariance spectra.
//!
//! With unit noise power and aspect ratio `gamma = p / n`, the empirical
//! eigenvalue distribution of a white sample covariance converges to the
//! density
//!
//! ```text
//! f(x) = sqrt((b - x)(x - a)) / (2 pi gamma x),   a = (1 - sqrt(gamma))^2,  b = (1 + sqrt(gamma))^2
//! ```
//!
//! The median has no closed form. It is found by bisection on a CDF obtained
//! from adaptive Simpson quadrature after the substitution
//! `x = (a + b)/2 + (b - a)/2 * cos(t)`, which removes the square-root edge
//! singularities and leaves a smooth integrand on `[0, pi]`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `CDF(median) - 1/2`.
pub const MEDIAN_TOLERANCE: f64 = 1e-10;

/// Dimension `p`, sample count `n` and their ratio `gamma = p / n`.
///
/// `0 < gamma <= 1`. The boundary `n == p` is admitted; `n < p` is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectRatio {
    p: usize,
    n: usize,
    gamma: f64,
}

impl AspectRatio {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("dimension p must be positive".into()));
        }
        if n < p {
            return Err(Error::InsufficientSamples { p, n });
        }
        Ok(Self {
            p,
            n,
            gamma: p as f64 / n as f64,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `1 + sqrt(gamma)`: smallest population spike that separates from the bulk.
    pub fn spike_threshold(&self) -> f64 {
        1.0 + self.gamma.sqrt()
    }

    /// `(1 + sqrt(gamma))^2`: upper edge of the bulk in whitened units.
    pub fn bulk_edge(&self) -> f64 {
        self.spike_threshold().powi(2)
    }

    pub fn law(&self) -> MpLaw {
        MpLaw::from_ratio(*self)
    }
}

/// Marchenko–Pastur law with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    gamma: f64,
    support_lo: f64,
    support_hi: f64,
}

impl MpLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Marchenko-Pastur ratio must lie in (0, 1], got {gamma}"
            )));
        }
        let r = gamma.sqrt();
        Ok(Self {
            gamma,
            support_lo: (1.0 - r).powi(2),
            support_hi: (1.0 + r).powi(2),
        })
    }

    pub fn from_ratio(ratio: AspectRatio) -> Self {
        Self::new(ratio.gamma()).expect("aspect ratio is validated on construction")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        mp_pdf(x, self)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        mp_cdf(x, self)
    }

    pub fn median(&self) -> f64 {
        mp_median(self)
    }

    fn centre_and_half_width(&self) -> (f64, f64) {
        (
            0.5 * (self.support_lo + self.support_hi),
            0.5 * (self.support_hi - self.support_lo),
        )
    }

    /// Density times the Jacobian of `x = m + h cos t`.
    fn integrand(&self, t: f64) -> f64 {
        let (_, h) = self.centre_and_half_width();
        let s = t.sin();
        // x = m + h cos t, written without cancellation at either edge.
        let x = if t < 0.5 * PI {
            self.support_hi - 2.0 * h * (0.5 * t).sin().powi(2)
        } else {
            self.support_lo + 2.0 * h * (0.5 * t).cos().powi(2)
        };
        if x <= 0.0 {
            // gamma == 1 at t == pi; the limit is (1 - cos t) / pi = 2 / pi.
            return (1.0 - t.cos()) / PI;
        }
        h * h * s * s / (2.0 * PI * self.gamma * x)
    }
}

/// Marchenko–Pastur density. Zero outside the support and at its edges.
pub fn mp_pdf(x: f64, law: &MpLaw) -> f64 {
    let (a, b) = law.support();
    if x <= a || x >= b || x <= 0.0 {
        return 0.0;
    }
    ((b - x) * (x - a)).max(0.0).sqrt() / (2.0 * PI * law.gamma * x)
}

/// Marchenko–Pastur CDF by adaptive quadrature.
pub fn mp_cdf(x: f64, law: &MpLaw) -> f64 {
    let (a, b) = law.support();
    if x <= a {
        return 0.0;
    }
    if x >= b {
        return 1.0;
    }
    let (m, h) = law.centre_and_half_width();
    let t = ((x - m) / h).clamp(-1.0, 1.0).acos();
    adaptive_simpson(&|t| law.integrand(t), t, PI, 1e-14).clamp(0.0, 1.0)
}

/// Median of the Marchenko–Pastur law, `CDF(median) = 1/2` to [`MEDIAN_TOLERANCE`].
///
/// Results are memoised per `gamma`, so Monte Carlo loops at a fixed aspect
/// ratio pay for the root search once.
pub fn mp_median(law: &MpLaw) -> f64 {
    static MEDIANS: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = MEDIANS.get_or_init(Default::default);
    let key = law.gamma().to_bits();
    if let Some(&m) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return m;
    }
    let m = bisect_median(law);
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, m);
    m
}

fn bisect_median(law: &MpLaw) -> f64 {
    let (mut lo, mut hi) = law.support();
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = mp_cdf(mid, law) - 0.5;
        if f.abs() < 0.1 * MEDIAN_TOLERANCE || hi - lo < 1e-15 * hi {
            break;
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 30)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(f64::EPSILON * whole.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// Median of a list of reals; even lengths average the two central order
/// statistics. Runs in expected linear time.
pub fn median(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mut buf = values.to_vec();
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let (_, upper, _) = buf.select_nth_unstable_by(n / 2, cmp);
    let upper = *upper;
    if n % 2 == 1 {
        return Some(upper);
    }
    // The lower central value is the maximum of the left partition.
    let lower = buf[..n / 2]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Some(0.5 * (lower + upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_vanishes_at_edges() {
        let law = MpLaw::new(0.25).unwrap();
        let (a, b) = law.support();
        assert_eq!(mp_pdf(a, &law), 0.0);
        assert_eq!(mp_pdf(b, &law), 0.0);
        assert_eq!(mp_pdf(b + 1.0, &law), 0.0);
        assert_eq!(mp_pdf(0.0, &law), 0.0);
        assert!(mp_pdf(1.0, &law) > 0.0);
    }

    #[test]
    fn aspect_ratio_rejects_fewer_samples_than_dimension() {
        assert!(matches!(
            AspectRatio::new(10, 9),
            Err(Error::InsufficientSamples { p: 10, n: 9 })
        ));
        let r = AspectRatio::new(10, 10).unwrap();
        assert_eq!(r.gamma(), 1.0);
        assert!(AspectRatio::new(0, 10).is_err());
    }

    #[test]
    fn median_small_gamma_tends_to_one() {
        for &g in &[1e-4, 1e-6, 1e-8] {
            let m = MpLaw::new(g).unwrap().median();
            assert!((m - 1.0).abs() < 4.0 * g.sqrt(), "gamma {g}: {m}");
        }
    }

    #[test]
    fn median_is_inside_support() {
        for &g in &[0.05, 0.3, 0.7, 1.0] {
            let law = MpLaw::new(g).unwrap();
            let (a, b) = law.support();
            let m = law.median();
            assert!(a < m && m < b);
            assert!((law.cdf(m) - 0.5).abs() < MEDIAN_TOLERANCE);
        }
    }

    #[test]
    fn median_is_strictly_monotone_in_gamma() {
        // Mean stays at 1 while the law skews right, so the median falls.
        let medians: Vec<f64> = (1..=9)
            .map(|k| MpLaw::new(k as f64 / 10.0).unwrap().median())
            .collect();
        for w in medians.windows(2) {
            assert!(w[1] < w[0], "{medians:?}");
        }
    }

    #[test]
    fn list_median_conventions() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0]), Some(3.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[5.0, 1.0, 3.0]), Some(3.0));
    }

    #[test]
    fn cdf_is_monotone() {
        let law = MpLaw::new(0.5).unwrap();
        let (a, b) = law.support();
        let mut prev = 0.0;
        for k in 0..=100 {
            let x = a + (b - a) * k as f64 / 100.0;
            let f = law.cdf(x);
            assert!(f >= prev - 1e-15);
            prev = f;
        }
        assert_eq!(law.cdf(b), 1.0);
    }
}
