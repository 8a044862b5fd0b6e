//! Wall-clock scaling of the eigendecomposition and of the noise and
//! shrinkage steps that follow it.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::{eigh, sample_covariance, AspectRatio};
use crate::rng::{complex_normal_matrix, stream_rng};
use crate::shrinkage::shrink_eigenvalues;

/// Minimum span over which the cheap step is repeated per timing.
const MIN_SPAN: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub eig_seconds: f64,
    pub shrink_seconds: f64,
    /// Ratio to the previous row; empty on the first row.
    pub eig_ratio: Option<f64>,
    pub shrink_ratio: Option<f64>,
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean seconds per call of `f`, repeated until at least [`MIN_SPAN`] passes.
fn time_per_call<F: FnMut() -> Result<()>>(mut f: F) -> Result<f64> {
    let start = Instant::now();
    let mut calls = 0u32;
    while calls == 0 || start.elapsed() < MIN_SPAN {
        f()?;
        calls += 1;
    }
    Ok(start.elapsed().as_secs_f64() / f64::from(calls))
}

/// Times both steps at each `p` on white data with `n = 2p`. Each timing is
/// the median of `reps` runs after one discarded warm-up run.
pub fn bench_scaling(p_list: &[usize], reps: usize) -> Result<Vec<ScalingRow>> {
    bench_scaling_seeded(p_list, reps, 0)
}

/// [`bench_scaling`] with the test matrices drawn under `seed`.
pub fn bench_scaling_seeded(p_list: &[usize], reps: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one repetition is needed".into()));
    }
    if p_list.is_empty() || p_list.contains(&0) || p_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("dimensions must be positive and ascending".into()));
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let n = 2 * p;
        let x = complex_normal_matrix(&mut stream_rng(seed, "bench", p as u64), p, n);
        let cov = sample_covariance(x.as_ref())?;
        let ratio = AspectRatio::new(p, n)?;
        let values = eigh(cov.matrix())?.eigenvalues().to_vec();
        let mut eig = Vec::with_capacity(reps);
        let mut shrink = Vec::with_capacity(reps);
        for rep in 0..=reps {
            let start = Instant::now();
            std::hint::black_box(eigh(std::hint::black_box(cov.matrix()))?);
            let e = start.elapsed().as_secs_f64();
            let s = time_per_call(|| {
                std::hint::black_box(shrink_eigenvalues(std::hint::black_box(&values), ratio)?);
                Ok(())
            })?;
            if rep > 0 {
                eig.push(e);
                shrink.push(s);
            }
        }
        let (eig_seconds, shrink_seconds) = (median_of(eig), median_of(shrink));
        let prev = rows.last();
        rows.push(ScalingRow {
            p,
            n,
            reps,
            eig_seconds,
            shrink_seconds,
            eig_ratio: prev.map(|r| eig_seconds / r.eig_seconds),
            shrink_ratio: prev.map(|r| shrink_seconds / r.shrink_seconds),
        });
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(out: W, rows: &[ScalingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["p", "n", "reps", "eig_seconds", "shrink_seconds", "eig_ratio", "shrink_ratio"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
