//! Synthetic space-time radar scenes.
//!
//! A scene has `N` channels and `K` pulses, so snapshots live in `C^p` with
//! `p = N K`. The true covariance is always clutter plus white noise,
//! `R = R_c + sigma2 I`, and is kept in low-rank form: the noise floor plus
//! the eigenpairs of `R_c` above numerical zero. Snapshots are drawn as
//! `z = sqrt(sigma2) w + U diag(sqrt(lambda) - sqrt(sigma2)) U^H w` with `w`
//! white, which is the Hermitian square root of `R` applied to `w`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::eigen::{adjoint_mul, compose, expand, mul, mul_adjoint, project};
use crate::rmt::io::{read_matrix, write_matrix, MatrixHeader};
use crate::rmt::{eigh, Spectral};
use crate::rng::{complex_normal_matrix, stream_rng};
use crate::shrinkage::{spike_limit, SpikedModel};

/// Relative level below which clutter eigenvalues are treated as zero.
const CLUTTER_RANK_TOL: f64 = 1e-10;

/// Default target: `f_d = 0.2`, `theta = 30` degrees.
pub const DEFAULT_TARGET_DOPPLER: f64 = 0.2;
pub const DEFAULT_TARGET_ANGLE_DEG: f64 = 30.0;

/// Names accepted by [`ScenarioConfig::preset`].
pub const PRESETS: &[&str] = &["challenge-synthetic", "ridge-128", "noise-64", "discretes-64"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringSpec {
    /// Angle in radians.
    pub theta: f64,
    /// Normalised Doppler frequency in `[-0.5, 0.5]`.
    pub doppler: f64,
    pub n_channels: usize,
    pub n_pulses: usize,
}

impl SteeringSpec {
    pub fn new(theta: f64, doppler: f64, n_channels: usize, n_pulses: usize) -> Result<Self> {
        if n_channels == 0 || n_pulses == 0 {
            return Err(Error::InvalidArgument("steering needs at least one channel and one pulse".into()));
        }
        if !(-0.5..=0.5).contains(&doppler) {
            return Err(Error::InvalidArgument(format!("Doppler {doppler} outside [-0.5, 0.5]")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("angle must be finite".into()));
        }
        Ok(Self {
            theta,
            doppler,
            n_channels,
            n_pulses,
        })
    }

    pub fn from_degrees(theta_deg: f64, doppler: f64, n_channels: usize, n_pulses: usize) -> Result<Self> {
        Self::new(theta_deg.to_radians(), doppler, n_channels, n_pulses)
    }

    pub fn dim(&self) -> usize {
        self.n_channels * self.n_pulses
    }
}

/// `A_theta (x) A_f` with `[A_theta]_i = exp(-j pi i sin theta)`,
/// `[A_f]_k = exp(-j 2 pi k f_d)`, `i = 1..N`, `k = 1..K`.
pub fn steering_vector(spec: &SteeringSpec) -> Vec<c64> {
    let k_len = spec.n_pulses;
    let st = spec.theta.sin();
    let mut out = Vec::with_capacity(spec.dim());
    for i in 1..=spec.n_channels {
        let a = c64::cis(-PI * i as f64 * st);
        for k in 1..=k_len {
            out.push(a * c64::cis(-2.0 * PI * k as f64 * spec.doppler));
        }
    }
    out
}

/// Steering vectors as the columns of a `p x m` matrix.
pub fn steering_matrix(specs: &[SteeringSpec]) -> Mat<c64> {
    let p = specs.first().map_or(0, |s| s.dim());
    let cols: Vec<Vec<c64>> = specs.iter().map(steering_vector).collect();
    Mat::from_fn(p, specs.len(), |i, j| cols[j][i])
}

/// `count` evenly spaced points covering `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    /// Unit-power white waveform; the clutter covariance is `H_c H_c^H`.
    White,
    /// Unit-modulus chirp `s(k) = exp(j pi rate k^2 / q)`; the clutter
    /// covariance is `H_c s s^H H_c^H`.
    Lfm { rate: f64 },
}

/// Point clutter return at a given angle and Doppler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterPatch {
    pub theta_deg: f64,
    pub doppler: f64,
    /// Per-element power.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClutterModel {
    None,
    /// Clutter impulse response convolved with the waveform.
    Taps { taps: Vec<c64>, waveform: Waveform },
    /// Sum of point returns `sum_m P_m a_m a_m^H`.
    Patches { patches: Vec<ClutterPatch> },
    /// Absolute spike eigenvalues on a seeded random orthonormal basis.
    Spiked { spikes: Vec<f64> },
}

/// Patches on the side-looking clutter ridge `f_d = 0.5 sin(theta)`, with
/// per-element clutter-to-noise ratio tapering linearly in dB from the centre
/// to the outermost angle.
pub fn ridge_patches(angles_deg: &[f64], cnr_centre_db: f64, cnr_edge_db: f64, sigma2: f64) -> Vec<ClutterPatch> {
    let span = angles_deg.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    angles_deg
        .iter()
        .map(|&a| {
            let frac = if span > 0.0 { a.abs() / span } else { 0.0 };
            let cnr_db = cnr_centre_db + (cnr_edge_db - cnr_centre_db) * frac;
            ClutterPatch {
                theta_deg: a,
                doppler: 0.5 * a.to_radians().sin(),
                power: sigma2 * 10f64.powf(cnr_db / 10.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub n_channels: usize,
    pub n_pulses: usize,
    pub pulse_length: usize,
    pub n_train: usize,
    pub sigma2: f64,
    pub clutter: ClutterModel,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn p(&self) -> usize {
        self.n_channels * self.n_pulses
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 || self.n_pulses == 0 {
            return Err(Error::InvalidArgument("scene needs at least one channel and one pulse".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power must be positive, got {}", self.sigma2)));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidArgument("training size must be positive".into()));
        }
        match &self.clutter {
            ClutterModel::Taps { taps, .. } => {
                if self.pulse_length == 0 {
                    return Err(Error::InvalidArgument("pulse length must be positive".into()));
                }
                if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
                    return Err(Error::InvalidArgument("clutter taps must be finite".into()));
                }
            }
            ClutterModel::Patches { patches } => {
                for patch in patches {
                    if !(patch.power >= 0.0) || !(-0.5..=0.5).contains(&patch.doppler) {
                        return Err(Error::InvalidArgument(format!("invalid clutter patch {patch:?}")));
                    }
                }
            }
            ClutterModel::Spiked { spikes } => {
                SpikedModel::new(self.p(), self.sigma2, spikes.clone())?;
            }
            ClutterModel::None => {}
        }
        Ok(())
    }

    pub fn steering(&self, theta_deg: f64, doppler: f64) -> Result<SteeringSpec> {
        SteeringSpec::from_degrees(theta_deg, doppler, self.n_channels, self.n_pulses)
    }

    pub fn default_target(&self) -> SteeringSpec {
        SteeringSpec::from_degrees(
            DEFAULT_TARGET_ANGLE_DEG,
            DEFAULT_TARGET_DOPPLER,
            self.n_channels,
            self.n_pulses,
        )
        .expect("default target is valid")
    }

    pub fn with_n_train(mut self, n: usize) -> Self {
        self.n_train = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn preset(name: &str) -> Result<Self> {
        let angles = |lo: i32, hi: i32, step: usize| -> Vec<f64> { (lo..=hi).step_by(step).map(f64::from).collect() };
        let cfg = match name {
            "challenge-synthetic" => {
                let sigma2 = 5e-14;
                Self {
                    name: name.into(),
                    n_channels: 8,
                    n_pulses: 64,
                    pulse_length: 1000,
                    n_train: 1024,
                    sigma2,
                    clutter: ClutterModel::Patches {
                        patches: ridge_patches(&angles(-60, 60, 5), 30.0, 10.0, sigma2),
                    },
                    seed: 0,
                }
            }
            "ridge-128" => Self {
                name: name.into(),
                n_channels: 4,
                n_pulses: 32,
                pulse_length: 1000,
                n_train: 256,
                sigma2: 1.0,
                clutter: ClutterModel::Patches {
                    patches: ridge_patches(&angles(-55, 55, 10), 30.0, 10.0, 1.0),
                },
                seed: 0,
            },
            "noise-64" => Self {
                name: name.into(),
                n_channels: 4,
                n_pulses: 16,
                pulse_length: 1,
                n_train: 1024,
                sigma2: 1.0,
                clutter: ClutterModel::None,
                seed: 0,
            },
            "discretes-64" => Self {
                name: name.into(),
                n_channels: 4,
                n_pulses: 16,
                pulse_length: 1,
                n_train: 1024,
                sigma2: 1.0,
                clutter: ClutterModel::Patches {
                    patches: vec![
                        ClutterPatch { theta_deg: -40.0, doppler: -0.3, power: 10f64.powf(2.5) },
                        ClutterPatch { theta_deg: 10.0, doppler: 0.4, power: 10f64.powf(2.5) },
                        ClutterPatch { theta_deg: 60.0, doppler: -0.1, power: 10f64.powf(2.5) },
                    ],
                },
                seed: 0,
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown scenario preset {other:?}; expected one of {PRESETS:?}"
                )))
            }
        };
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `R = sigma2 I + U diag(spikes - sigma2) U^H` with orthonormal `U`.
#[derive(Debug, Clone)]
pub struct TrueCovariance {
    sigma2: f64,
    spikes: Vec<f64>,
    basis: Mat<c64>,
}

impl TrueCovariance {
    pub fn white(p: usize, sigma2: f64) -> Self {
        Self {
            sigma2,
            spikes: Vec::new(),
            basis: Mat::zeros(p, 0),
        }
    }

    /// Builds from a noise floor and a clutter factor `F` with `R_c = F F^H`.
    pub fn from_clutter_factor(sigma2: f64, factor: MatRef<'_, c64>) -> Result<Self> {
        let p = factor.nrows();
        let m = factor.ncols();
        if m == 0 {
            return Ok(Self::white(p, sigma2));
        }
        let (mu, basis) = if m <= p {
            let gram = eigh(adjoint_mul(factor, factor).as_ref())?;
            let mu = gram.eigenvalues().to_vec();
            let w = gram.eigenvectors();
            let fw = mul(factor, w);
            let scale: Vec<f64> = mu.iter().map(|&v| if v > 0.0 { v.sqrt().recip() } else { 0.0 }).collect();
            (mu, Mat::from_fn(p, m, |i, j| fw[(i, j)] * scale[j]))
        } else {
            let full = eigh(mul_adjoint(factor, factor).as_ref())?;
            (full.eigenvalues().to_vec(), full.eigenvectors().to_owned())
        };
        let top = mu.first().copied().unwrap_or(0.0);
        let keep = mu.iter().take_while(|&&v| v > CLUTTER_RANK_TOL * top && v > 0.0).count();
        let spikes = mu[..keep].iter().map(|v| v + sigma2).collect();
        Ok(Self {
            sigma2,
            spikes,
            basis: basis.subcols(0, keep).to_owned(),
        })
    }

    /// Spiked model on a random orthonormal basis drawn from `seed`.
    pub fn spiked(model: &SpikedModel, seed: u64) -> Self {
        let p = model.p();
        let r = model.rank();
        let basis = if r == 0 {
            Mat::zeros(p, 0)
        } else {
            let mut rng = stream_rng(seed, "basis", 0);
            complex_normal_matrix(&mut rng, p, r).qr().compute_thin_Q()
        };
        Self {
            sigma2: model.sigma2(),
            spikes: model.spikes().to_vec(),
            basis,
        }
    }

    pub fn p(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Eigenvalues above the floor, descending.
    pub fn spikes(&self) -> &[f64] {
        &self.spikes
    }

    pub fn rank(&self) -> usize {
        self.spikes.len()
    }

    /// Eigenvectors of the spikes, `p x r`.
    pub fn basis(&self) -> MatRef<'_, c64> {
        self.basis.as_ref()
    }

    pub fn spiked_model(&self) -> Result<SpikedModel> {
        SpikedModel::new(self.p(), self.sigma2, self.spikes.clone())
    }

    pub fn full_spectrum(&self) -> Vec<f64> {
        let mut v = self.spikes.clone();
        v.resize(self.p(), self.sigma2);
        v
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let d: Vec<f64> = self.spikes.iter().map(|l| l - self.sigma2).collect();
        let mut r = compose(self.basis(), &d);
        for i in 0..self.p() {
            r[(i, i)] += c64::new(self.sigma2, 0.0);
        }
        r
    }

    /// `R^power y`.
    pub fn apply_power(&self, y: &[c64], power: f64) -> Vec<c64> {
        let floor = self.sigma2.powf(power);
        let coeffs = project(self.basis(), y);
        let scaled: Vec<c64> = coeffs
            .iter()
            .zip(&self.spikes)
            .map(|(c, l)| c * (l.powf(power) - floor))
            .collect();
        let mut out = expand(self.basis(), &scaled);
        for (o, yi) in out.iter_mut().zip(y) {
            *o += yi * floor;
        }
        out
    }

    /// `y^H R^{-1} y`.
    pub fn inverse_quadratic_form(&self, y: &[c64]) -> f64 {
        let coeffs = project(self.basis(), y);
        let norm2: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        norm2 / self.sigma2
            + coeffs
                .iter()
                .zip(&self.spikes)
                .map(|(c, l)| c.norm_sqr() * (1.0 / l - 1.0 / self.sigma2))
                .sum::<f64>()
    }

    /// `R^{1/2} W` for a `p x n` block of white snapshots.
    pub fn color(&self, white: MatRef<'_, c64>) -> Mat<c64> {
        let root_floor = self.sigma2.sqrt();
        let mut out = Mat::from_fn(white.nrows(), white.ncols(), |i, j| white[(i, j)] * root_floor);
        if self.rank() > 0 {
            let mut coeffs = adjoint_mul(self.basis(), white);
            for (k, l) in self.spikes.iter().enumerate() {
                let g = l.sqrt() - root_floor;
                for j in 0..coeffs.ncols() {
                    coeffs[(k, j)] *= g;
                }
            }
            faer::linalg::matmul::matmul(
                out.as_mut(),
                faer::Accum::Add,
                self.basis(),
                coeffs.as_ref(),
                c64::new(1.0, 0.0),
                faer::Par::Seq,
            );
        }
        out
    }
}

/// Non-fatal scene construction conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioWarning {
    ClutterRankExceeded { rank: usize, limit: usize },
}

impl std::fmt::Display for ScenarioWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioWarning::ClutterRankExceeded { rank, limit } => {
                write!(f, "clutter rank {rank} exceeds the spiked-model limit of {limit}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub config: ScenarioConfig,
    pub covariance: TrueCovariance,
    pub warnings: Vec<ScenarioWarning>,
}

impl Scene {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        let (covariance, warnings) = synthesize_clutter_covariance(&config)?;
        Ok(Self {
            config,
            covariance,
            warnings,
        })
    }

    /// Draws the training block and one test snapshot of trial `index`.
    pub fn draw(&self, index: u64) -> DataCube {
        self.draw_with(self.config.n_train, 1, index)
    }

    pub fn draw_with(&self, n_train: usize, n_test: usize, index: u64) -> DataCube {
        let p = self.config.p();
        let seed = self.config.seed;
        let training = self
            .covariance
            .color(complex_normal_matrix(&mut stream_rng(seed, "training", index), p, n_train).as_ref());
        let test = self
            .covariance
            .color(complex_normal_matrix(&mut stream_rng(seed, "test", index), p, n_test).as_ref());
        DataCube {
            training,
            test,
            truth: Some(self.covariance.clone()),
        }
    }
}

/// Clutter-plus-noise covariance of a scene, with a warning when the clutter
/// rank exceeds the spiked-model fraction.
pub fn synthesize_clutter_covariance(config: &ScenarioConfig) -> Result<(TrueCovariance, Vec<ScenarioWarning>)> {
    config.validate()?;
    let p = config.p();
    let sigma2 = config.sigma2;
    let cov = match &config.clutter {
        ClutterModel::None => TrueCovariance::white(p, sigma2),
        ClutterModel::Taps { taps, waveform } => {
            let q = config.pulse_length;
            let h = Mat::from_fn(p, q, |i, j| {
                if i >= j && i - j < taps.len() {
                    taps[i - j]
                } else {
                    c64::new(0.0, 0.0)
                }
            });
            match waveform {
                Waveform::White => TrueCovariance::from_clutter_factor(sigma2, h.as_ref())?,
                Waveform::Lfm { rate } => {
                    let s = Mat::from_fn(q, 1, |k, _| c64::cis(PI * rate * (k * k) as f64 / q as f64));
                    TrueCovariance::from_clutter_factor(sigma2, mul(h.as_ref(), s.as_ref()).as_ref())?
                }
            }
        }
        ClutterModel::Patches { patches } => {
            let specs: Vec<(SteeringSpec, f64)> = patches
                .iter()
                .filter(|pt| pt.power > 0.0)
                .map(|pt| Ok((config.steering(pt.theta_deg, pt.doppler)?, pt.power.sqrt())))
                .collect::<Result<_>>()?;
            let cols: Vec<Vec<c64>> = specs.iter().map(|(s, g)| steering_vector(s).into_iter().map(|v| v * g).collect()).collect();
            let factor = Mat::from_fn(p, cols.len(), |i, j| cols[j][i]);
            TrueCovariance::from_clutter_factor(sigma2, factor.as_ref())?
        }
        ClutterModel::Spiked { spikes } => {
            TrueCovariance::spiked(&SpikedModel::new(p, sigma2, spikes.clone())?, config.seed)
        }
    };
    let limit = spike_limit(p);
    let mut warnings = Vec::new();
    if cov.rank() > limit {
        warnings.push(ScenarioWarning::ClutterRankExceeded { rank: cov.rank(), limit });
    }
    Ok((cov, warnings))
}

/// Zero-mean circular complex Gaussian snapshots with covariance `r`, using
/// the Hermitian square root of `r`.
pub fn sample_snapshots(r: MatRef<'_, c64>, n: usize, seed: u64) -> Result<DataCube> {
    let decomp = eigh(r)?;
    let top = decomp.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let low = decomp.min_eigenvalue();
    if low < -1e-10 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite(low));
    }
    let cut = 1e-10 * top;
    let roots: Vec<f64> = decomp
        .eigenvalues()
        .iter()
        .map(|&v| if v > cut { v.sqrt() } else { 0.0 })
        .collect();
    let root = compose(decomp.eigenvectors(), &roots);
    let white = complex_normal_matrix(&mut stream_rng(seed, "training", 0), r.nrows(), n);
    Ok(DataCube {
        training: mul(root.as_ref(), white.as_ref()),
        test: Mat::zeros(r.nrows(), 0),
        truth: None,
    })
}

/// Training snapshots (columns) plus held-out test snapshots.
#[derive(Debug, Clone)]
pub struct DataCube {
    pub training: Mat<c64>,
    pub test: Mat<c64>,
    pub truth: Option<TrueCovariance>,
}

impl DataCube {
    pub fn p(&self) -> usize {
        self.training.nrows()
    }

    pub fn n_train(&self) -> usize {
        self.training.ncols()
    }

    pub fn test_snapshot(&self, j: usize) -> Vec<c64> {
        self.test.col(j).iter().copied().collect()
    }

    /// Writes `[training | test]` with `n_snapshots` and `n_test` recorded.
    pub fn write(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let p = self.p();
        let n = self.n_train();
        let t = self.test.ncols();
        let joined = Mat::from_fn(p, n + t, |i, j| if j < n { self.training[(i, j)] } else { self.test[(i, j - n)] });
        let mut header = MatrixHeader::new(p, n + t);
        header.n_snapshots = Some(n);
        header.n_test = Some(t);
        write_matrix(stem, joined.as_ref(), &header)
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let (m, header) = read_matrix(stem)?;
        let n = header.n_snapshots.unwrap_or(header.cols);
        let t = header.cols - n;
        let training = m.subcols(0, n).to_owned();
        let test = m.subcols(n, t).to_owned();
        let cube = Self {
            training,
            test,
            truth: None,
        };
        if cube.training.as_ref().is_all_finite() && cube.test.as_ref().is_all_finite() {
            Ok(cube)
        } else {
            Err(Error::InvalidMatrix("data cube has non-finite entries".into()))
        }
    }
}

/// Adds `amplitude * steering_vector(spec)` to every test snapshot.
pub fn inject_target(mut cube: DataCube, spec: &SteeringSpec, amplitude: c64) -> Result<DataCube> {
    if spec.dim() != cube.p() {
        return Err(Error::DimensionMismatch {
            expected: cube.p(),
            found: spec.dim(),
        });
    }
    if amplitude == c64::new(0.0, 0.0) {
        return Ok(cube);
    }
    let s = steering_vector(spec);
    for j in 0..cube.test.ncols() {
        for (i, si) in s.iter().enumerate() {
            cube.test[(i, j)] += si * amplitude;
        }
    }
    Ok(cube)
}

/// Target amplitude `|h|` giving `snr = |h|^2 p / sigma2`.
pub fn amplitude_for_snr(snr_db: f64, sigma2: f64, p: usize) -> f64 {
    (sigma2 * 10f64.powf(snr_db / 10.0) / p as f64).sqrt()
}

/// `|h|^2 p / sigma2` in dB.
pub fn snr_db(amplitude: c64, sigma2: f64, p: usize) -> f64 {
    10.0 * (amplitude.norm_sqr() * p as f64 / sigma2).log10()
}
