//! Rank-constrained maximum-likelihood baseline.
//!
//! Decision variables are the eigenvalues `x_i` of the whitened *inverse*
//! covariance, one per sample eigenvector. The problem is
//!
//! ```text
//! minimise   sum_i d_i x_i - log x_i
//! subject to x_1 <= x_2 <= ... <= x_r,   eps <= x_i <= 1,   x_i = 1 for i > r
//! ```
//!
//! where `d_i` are the whitened sample eigenvalues in descending order.
//! Ascending `x` gives descending covariance eigenvalues `sigma2 / x_i`.
//! The objective is separable and convex, so pooling adjacent violators
//! followed by clipping to `[eps, 1]` is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::EigenDecomposition;
use crate::shrinkage::{cosine2, f_map, CovarianceEstimate, NoiseEstimate};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcmlProblem {
    d: Vec<f64>,
    rank: usize,
    epsilon: f64,
}

impl RcmlProblem {
    pub fn new(d: Vec<f64>, rank: usize) -> Result<Self> {
        Self::with_epsilon(d, rank, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(d: Vec<f64>, rank: usize, epsilon: f64) -> Result<Self> {
        if rank >= d.len() {
            return Err(Error::Infeasible(format!(
                "rank {rank} must be below the dimension {}",
                d.len()
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!("whitened eigenvalue {bad} is not a finite non-negative number")));
        }
        Ok(Self { d, rank, epsilon })
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `sum_i d_i x_i - log x_i`; infinite outside the positive orthant.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.d
            .iter()
            .zip(x)
            .map(|(&d, &x)| if x > 0.0 { d * x - x.ln() } else { f64::INFINITY })
            .sum()
    }

    /// Largest violation of any constraint by `x`.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        let r = self.rank;
        let mut worst = 0.0f64;
        for (i, &v) in x.iter().enumerate() {
            worst = worst.max(self.epsilon - v).max(v - 1.0);
            if i >= r {
                worst = worst.max((v - 1.0).abs());
            }
        }
        for w in x[..r].windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
        worst
    }
}

/// Optimal whitened inverse eigenvalues.
pub fn solve_rcml(problem: &RcmlProblem) -> Vec<f64> {
    let r = problem.rank;
    let mut x = pool_adjacent_violators(&problem.d[..r]);
    for v in &mut x {
        *v = v.clamp(problem.epsilon, 1.0);
    }
    x.resize(problem.d.len(), 1.0);
    x
}

/// Ascending isotonic minimiser of `sum d_i x_i - log x_i`. A pooled block
/// `S` takes the value `|S| / sum_{i in S} d_i`.
fn pool_adjacent_violators(d: &[f64]) -> Vec<f64> {
    // (sum of d, block length)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(d.len());
    let value = |(sum, len): (f64, usize)| if sum > 0.0 { len as f64 / sum } else { f64::INFINITY };
    for &di in d {
        blocks.push((di, 1));
        while blocks.len() > 1 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if value(prev) <= value(last) {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (prev.0 + last.0, prev.1 + last.1);
        }
    }
    let mut out = Vec::with_capacity(d.len());
    for b in blocks {
        out.extend(std::iter::repeat(value(b)).take(b.1));
    }
    out
}

/// Clipping estimate: leading `rank` sample eigenvalues kept above the noise
/// floor, the rest set to it.
pub fn rcml_estimate(decomp: &EigenDecomposition, noise: NoiseEstimate, rank: usize) -> Result<CovarianceEstimate> {
    let s2 = noise.sigma2_hat;
    let d: Vec<f64> = decomp.eigenvalues().iter().map(|l| (l / s2).max(0.0)).collect();
    let problem = RcmlProblem::new(d, rank)?;
    let x = solve_rcml(&problem);
    let eigenvalues: Vec<f64> = x.iter().map(|v| s2 / v).collect();
    let spike_count = eigenvalues.iter().filter(|&&l| l > s2).count();
    Ok(CovarianceEstimate::new(
        eigenvalues,
        decomp.shared_eigenvectors(),
        noise,
        spike_count,
        None,
        Vec::new(),
    ))
}

/// Scalar Stein-loss objective `a * lam - b * log(lam) + m`.
pub fn stein_objective(lam: f64, a: f64, b: f64, m: f64) -> Result<f64> {
    if !(lam > 0.0) {
        return Err(Error::InvalidArgument(format!("objective needs a positive argument, got {lam}")));
    }
    Ok(a * lam - b * lam.ln() + m)
}

/// Coefficients `(a, m)` of the per-spike Stein objective for a whitened
/// sample eigenvalue `x`:
/// `a = c^2 / x + s^2`, `m = 1 / x - 1 - a + log f(x)`, with `c`, `s`
/// evaluated at `f(x)`. The minimiser is `1 / a`.
pub fn stein_coefficients(x: f64, gamma: f64) -> Result<(f64, f64)> {
    let ell = f_map(x, gamma)?;
    let c2 = cosine2(ell, gamma);
    let a = c2 / x + (1.0 - c2);
    Ok((a, 1.0 / x - 1.0 - a + ell.ln()))
}
