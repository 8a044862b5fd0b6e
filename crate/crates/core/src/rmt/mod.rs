//! Random-matrix primitives: the Marchenko–Pastur law, sample covariance,
//! Hermitian eigendecomposition and the shared binary matrix format.

pub mod covariance;
pub mod eigen;
pub mod io;
pub mod mp;

pub use covariance::{sample_covariance, sample_covariance_real, SampleCovariance};
pub use eigen::{eigh, eigvalsh, eigvalsh_real, EigenDecomposition, Spectral};
pub use mp::{median, mp_cdf, mp_median, mp_pdf, AspectRatio, MpLaw};
