//! Spiked covariance estimation for space-time adaptive processing.
//!
//! The crate estimates clutter-plus-noise covariance matrices from a few
//! training snapshots by shrinking the sample spectrum with random-matrix
//! corrections, and evaluates the estimates in adaptive filtering and
//! low-rank detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rcml;
pub mod rmt;
pub mod rng;
pub mod scenario;
pub mod shrinkage;

pub use faer::{c64, Mat, MatRef};

pub use error::{Error, Result};
pub use rcml::{rcml_estimate, solve_rcml, RcmlProblem};
pub use rmt::{AspectRatio, EigenDecomposition, MpLaw, SampleCovariance, Spectral};
pub use scenario::{
    inject_target, steering_vector, synthesize_clutter_covariance, DataCube, ScenarioConfig, Scene, SteeringSpec,
    TrueCovariance,
};
pub use shrinkage::{
    clt_params, estimate_noise, shrink_eigenvalues, shrink_spectrum, CovarianceEstimate, NoiseEstimate,
    SpikedModel,
};
