//! Monte Carlo validation: two-sample K-S tests, eigenvalue CLT checks,
//! metric sweeps and scaling benchmarks.

pub mod bench;
pub mod clt;
pub mod ks;
pub mod sweep;

pub use bench::{bench_scaling, bench_scaling_seeded, write_scaling_csv, ScalingRow};
pub use clt::{verify_clt, CltReport, SpikeClt};
pub use ks::{ks_two_sample, KsResult};
pub use sweep::{
    evaluate_trial, snr_sweep, sweep, Axis, EstimatorKind, Metric, SweepOptions, SweepTable, TrialOutcome, TrialPlan,
};
