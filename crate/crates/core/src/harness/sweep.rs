//! Monte Carlo sweeps over training size, Doppler, angle and SNR.
//!
//! Trials run in parallel and are collected in trial order before any
//! reduction, so a table depends only on the plan and its seed.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{statistic_pair, theoretical_pd, threshold_for_pfa, training_decomposition, Projector};
use crate::error::{Error, Result};
use crate::metrics::{kantorovich_bound, realized_kappa, stein_loss_spectral, SteeringBatch};
use crate::rcml::rcml_estimate;
use crate::rmt::{eigh, sample_covariance, AspectRatio};
use crate::scenario::{
    amplitude_for_snr, linear_grid, steering_vector, ScenarioConfig, Scene, SteeringSpec, DEFAULT_TARGET_ANGLE_DEG,
    DEFAULT_TARGET_DOPPLER,
};
use crate::shrinkage::{shrink_spectrum, CovarianceEstimate};

pub const DEFAULT_TRIALS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Shrinkage,
    Rcml,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Shrinkage, EstimatorKind::Rcml];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Shrinkage => "shrinkage",
            EstimatorKind::Rcml => "rcml",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shrinkage" => Ok(EstimatorKind::Shrinkage),
            "rcml" => Ok(EstimatorKind::Rcml),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rho,
    Bound,
    MvdrRatio,
    SteinLoss,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rho, Metric::Bound, Metric::MvdrRatio, Metric::SteinLoss];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rho => "rho",
            Metric::Bound => "bound",
            Metric::MvdrRatio => "mvdr_ratio",
            Metric::SteinLoss => "stein_loss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    Doppler,
    Angle,
    Snr,
}

impl Axis {
    pub fn column(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::Doppler => "doppler",
            Axis::Angle => "angle_deg",
            Axis::Snr => "snr_db",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Axis::N),
            "doppler" => Ok(Axis::Doppler),
            "angle" => Ok(Axis::Angle),
            "snr" => Ok(Axis::Snr),
            other => Err(Error::InvalidArgument(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub scenario: ScenarioConfig,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub metrics: Vec<Metric>,
    pub seed: u64,
}

impl TrialPlan {
    /// Both estimators and every metric.
    pub fn new(scenario: ScenarioConfig, trials: usize, seed: u64) -> Self {
        Self {
            scenario,
            trials,
            estimators: EstimatorKind::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("plan lists no estimators".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidArgument("plan lists no metrics".into()));
        }
        Ok(())
    }

    pub fn scene(&self) -> Result<Scene> {
        Scene::build(self.scenario.clone().with_seed(self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Training sizes of the `n` axis as multiples of `p`.
    pub n_multiples: Vec<usize>,
    pub doppler_points: usize,
    pub angle_points: usize,
    pub target_angle_deg: f64,
    pub target_doppler: f64,
    /// Clipping rank; the shrinkage spike count of the same trial when unset.
    pub rcml_rank: Option<usize>,
    pub snr_db: Vec<f64>,
    pub p_fa: Vec<f64>,
    /// Detector rank; the estimated spike count when unset.
    pub detector_rank: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n_multiples: (1..=5).collect(),
            doppler_points: 101,
            angle_points: 181,
            target_angle_deg: DEFAULT_TARGET_ANGLE_DEG,
            target_doppler: DEFAULT_TARGET_DOPPLER,
            rcml_rank: None,
            snr_db: (0..=20).map(|k| -10.0 + 2.0 * k as f64).collect(),
            p_fa: vec![1e-2],
            detector_rank: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(v) => v as f64,
            Cell::Real(v) => v,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl SweepTable {
    fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Checks a CSV against the header it is expected to carry and that every
/// row has as many fields.
pub fn validate_csv(text: &str, header: &[String]) -> Result<usize> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Format(format!("unexpected header {found:?}")));
    }
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Format(format!("row {rows} has {} fields", record.len())));
        }
        rows += 1;
    }
    Ok(rows)
}

/// Metrics of one estimator on one trial. `rho` and `mvdr_ratio` hold one
/// mean per steering group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutcome {
    pub kind: EstimatorKind,
    pub spike_count: usize,
    pub spiked_eigenvalues: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub mvdr_ratio: Vec<f64>,
    /// Asymptotic condition-number bound.
    pub bound: f64,
    /// Condition-number bound of this realisation.
    pub realized_bound: f64,
    pub stein_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub n: usize,
    pub gamma: f64,
    pub estimators: Vec<EstimatorOutcome>,
}

impl TrialOutcome {
    pub fn get(&self, kind: EstimatorKind) -> Option<&EstimatorOutcome> {
        self.estimators.iter().find(|e| e.kind == kind)
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Estimates for every requested kind from one training block.
pub fn estimate_all(
    scene: &Scene,
    n: usize,
    trial: u64,
    kinds: &[EstimatorKind],
    rcml_rank: Option<usize>,
) -> Result<Vec<(EstimatorKind, CovarianceEstimate)>> {
    let cube = scene.draw_with(n, 0, trial);
    let cov = sample_covariance(cube.training.as_ref())?;
    let ratio = AspectRatio::new(cov.dim(), n)?;
    let decomp = eigh(cov.matrix())?;
    let shrunk = shrink_spectrum(&decomp, ratio)?;
    kinds
        .iter()
        .map(|&kind| {
            let est = match kind {
                EstimatorKind::Shrinkage => shrunk.clone(),
                EstimatorKind::Rcml => {
                    rcml_estimate(&decomp, shrunk.noise(), rcml_rank.unwrap_or(shrunk.spike_count()))?
                }
            };
            Ok((kind, est))
        })
        .collect()
}

/// Draws trial `trial` with `n` training snapshots and scores each
/// estimator against every steering group.
pub fn evaluate_trial(
    scene: &Scene,
    n: usize,
    trial: u64,
    kinds: &[EstimatorKind],
    groups: &[SteeringBatch<'_>],
    rcml_rank: Option<usize>,
) -> Result<TrialOutcome> {
    let gamma = scene.config.p() as f64 / n as f64;
    let truth = &scene.covariance;
    let model = truth.spiked_model()?;
    let estimators = estimate_all(scene, n, trial, kinds, rcml_rank)?
        .into_iter()
        .map(|(kind, est)| {
            let mut rho = Vec::with_capacity(groups.len());
            let mut mvdr = Vec::with_capacity(groups.len());
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for g in groups {
                let r = g.rho(&est)?;
                lo = r.iter().copied().fold(lo, f64::min);
                hi = r.iter().copied().fold(hi, f64::max);
                rho.push(mean(&r));
                mvdr.push(mean(&g.mvdr_ratio(&est)?));
            }
            Ok(EstimatorOutcome {
                kind,
                spike_count: est.spike_count(),
                spiked_eigenvalues: est.spiked_eigenvalues().to_vec(),
                rho,
                rho_min: lo,
                rho_max: hi,
                mvdr_ratio: mvdr,
                bound: kantorovich_bound(&model, &est, gamma)?.lower_bound,
                realized_bound: realized_kappa(truth, &est)?.lower_bound,
                stein_loss: stein_loss_spectral(truth, &est)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome {
        trial,
        n,
        gamma,
        estimators,
    })
}

/// Runs `trials` trials in parallel and returns them in trial order.
pub fn run_trials(
    scene: &Scene,
    n: usize,
    trials: usize,
    kinds: &[EstimatorKind],
    groups: &[SteeringBatch<'_>],
    rcml_rank: Option<usize>,
) -> Result<Vec<TrialOutcome>> {
    let out: Vec<Result<TrialOutcome>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| evaluate_trial(scene, n, t, kinds, groups, rcml_rank))
        .collect();
    out.into_iter().collect()
}

fn metric_header(axis: Axis, plan: &TrialPlan) -> Vec<String> {
    let mut header = vec![axis.column().to_owned(), "gamma".to_owned()];
    for kind in &plan.estimators {
        for metric in &plan.metrics {
            header.push(format!("{}_{}", metric.name(), kind.name()));
        }
    }
    header.push("trials".to_owned());
    header
}

/// Trial-averaged metric cells of steering group `g`.
fn metric_cells(plan: &TrialPlan, outcomes: &[TrialOutcome], g: usize) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &kind in &plan.estimators {
        let per: Vec<&EstimatorOutcome> = outcomes.iter().filter_map(|o| o.get(kind)).collect();
        let avg = |f: &dyn Fn(&EstimatorOutcome) -> f64| per.iter().map(|e| f(e)).sum::<f64>() / per.len() as f64;
        for metric in &plan.metrics {
            cells.push(Cell::Real(match metric {
                Metric::Rho => avg(&|e| e.rho[g]),
                Metric::Bound => avg(&|e| e.bound),
                Metric::MvdrRatio => avg(&|e| e.mvdr_ratio[g]),
                Metric::SteinLoss => avg(&|e| e.stein_loss),
            }));
        }
    }
    cells
}

fn specs(config: &ScenarioConfig, pairs: impl Iterator<Item = (f64, f64)>) -> Result<Vec<SteeringSpec>> {
    pairs.map(|(theta, fd)| config.steering(theta, fd)).collect()
}

/// Angle and Doppler grids used to marginalise the two sweeps.
pub fn angle_grid(points: usize) -> Vec<f64> {
    linear_grid(-90.0, 90.0, points)
}

pub fn doppler_grid(points: usize) -> Vec<f64> {
    linear_grid(-0.5, 0.5, points)
}

/// Metric table along `axis`. The `snr` axis produces detection curves.
pub fn sweep(plan: &TrialPlan, axis: Axis, options: &SweepOptions) -> Result<SweepTable> {
    plan.validate()?;
    match axis {
        Axis::Snr => return snr_sweep(plan, options),
        Axis::N if options.n_multiples.is_empty() || options.n_multiples.contains(&0) => {
            return Err(Error::InvalidArgument("training multiples must be positive".into()))
        }
        Axis::Doppler | Axis::Angle if options.doppler_points < 2 || options.angle_points < 2 => {
            return Err(Error::InvalidArgument("sweep grids need at least two points".into()))
        }
        _ => {}
    }
    let mut table = SweepTable::new(metric_header(axis, plan));
    if plan.trials == 0 {
        return Ok(table);
    }
    let scene = plan.scene()?;
    let cfg = &scene.config;
    let p = cfg.p();
    match axis {
        Axis::N => {
            let dopplers = doppler_grid(options.doppler_points);
            let group = SteeringBatch::from_specs(
                &scene.covariance,
                &specs(cfg, dopplers.iter().map(|&fd| (options.target_angle_deg, fd)))?,
            )?;
            let groups = [group];
            for &m in &options.n_multiples {
                let n = m * p;
                let outcomes = run_trials(&scene, n, plan.trials, &plan.estimators, &groups, options.rcml_rank)?;
                let mut row = vec![Cell::Int(n as i64), Cell::Real(p as f64 / n as f64)];
                row.extend(metric_cells(plan, &outcomes, 0));
                row.push(Cell::Int(plan.trials as i64));
                table.rows.push(row);
            }
        }
        Axis::Doppler | Axis::Angle => {
            let angles = angle_grid(options.angle_points);
            let dopplers = doppler_grid(options.doppler_points);
            let (axis_values, groups) = if axis == Axis::Doppler {
                let groups = dopplers
                    .iter()
                    .map(|&fd| SteeringBatch::from_specs(&scene.covariance, &specs(cfg, angles.iter().map(|&a| (a, fd)))?))
                    .collect::<Result<Vec<_>>>()?;
                (dopplers, groups)
            } else {
                let groups = angles
                    .iter()
                    .map(|&a| SteeringBatch::from_specs(&scene.covariance, &specs(cfg, dopplers.iter().map(|&fd| (a, fd)))?))
                    .collect::<Result<Vec<_>>>()?;
                (angles, groups)
            };
            let n = cfg.n_train;
            let outcomes = run_trials(&scene, n, plan.trials, &plan.estimators, &groups, options.rcml_rank)?;
            for (g, value) in axis_values.iter().enumerate() {
                let mut row = vec![Cell::Real(*value), Cell::Real(p as f64 / n as f64)];
                row.extend(metric_cells(plan, &outcomes, g));
                row.push(Cell::Int(plan.trials as i64));
                table.rows.push(row);
            }
        }
        Axis::Snr => unreachable!(),
    }
    Ok(table)
}

/// Detector statistics of one trial at several target amplitudes sharing
/// the same training block and noise snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrial {
    pub rank: usize,
    pub sigma2_hat: f64,
    pub statistics: Vec<f64>,
}

pub fn detection_trial(
    scene: &Scene,
    n: usize,
    trial: u64,
    target: &SteeringSpec,
    amplitudes: &[f64],
    rank: Option<usize>,
) -> Result<DetectionTrial> {
    let cube = scene.draw_with(n, 1, trial);
    let (decomp, noise) = training_decomposition(cube.training.as_ref())?;
    let ratio = AspectRatio::new(cube.p(), n)?;
    let rank = rank.unwrap_or_else(|| {
        let edge = ratio.bulk_edge();
        decomp.eigenvalues().iter().take_while(|&&l| l / noise.sigma2_hat > edge).count()
    });
    let proj = Projector::new(decomp.eigenvectors(), rank)?;
    let s = steering_vector(target);
    let w = cube.test_snapshot(0);
    let statistics = amplitudes
        .iter()
        .map(|&a| {
            let y: Vec<c64> = w.iter().zip(&s).map(|(wi, si)| wi + si * a).collect();
            Ok(statistic_pair(&y, &s, &proj, noise.sigma2_hat)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionTrial {
        rank,
        sigma2_hat: noise.sigma2_hat,
        statistics,
    })
}

pub fn run_detection_trials(
    scene: &Scene,
    n: usize,
    trials: usize,
    target: &SteeringSpec,
    amplitudes: &[f64],
    rank: Option<usize>,
) -> Result<Vec<DetectionTrial>> {
    let out: Vec<Result<DetectionTrial>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| detection_trial(scene, n, t, target, amplitudes, rank))
        .collect();
    out.into_iter().collect()
}

pub const SNR_HEADER: [&str; 5] = ["snr_db", "p_fa", "empirical_pd", "theoretical_pd", "trials"];

/// Empirical and asymptotic detection probability over an SNR grid, with
/// common random numbers across SNR points.
pub fn snr_sweep(plan: &TrialPlan, options: &SweepOptions) -> Result<SweepTable> {
    plan.validate()?;
    for &pfa in &options.p_fa {
        threshold_for_pfa(pfa)?;
    }
    let mut table = SweepTable::new(SNR_HEADER.iter().map(|s| s.to_string()).collect());
    if plan.trials == 0 {
        return Ok(table);
    }
    let scene = plan.scene()?;
    let cfg = &scene.config;
    let (p, n, sigma2) = (cfg.p(), cfg.n_train, scene.covariance.sigma2());
    let gamma = p as f64 / n as f64;
    let target = cfg.steering(options.target_angle_deg, options.target_doppler)?;
    let amplitudes: Vec<f64> = options.snr_db.iter().map(|&db| amplitude_for_snr(db, sigma2, p)).collect();
    let trials = run_detection_trials(&scene, n, plan.trials, &target, &amplitudes, options.detector_rank)?;
    let model = scene.covariance.spiked_model()?;
    for (k, &db) in options.snr_db.iter().enumerate() {
        for &pfa in &options.p_fa {
            let threshold = 2.0 * threshold_for_pfa(pfa)?;
            let hits = trials.iter().filter(|t| t.statistics[k] > threshold).count();
            let theory = match theoretical_pd(
                &model,
                &target,
                c64::new(amplitudes[k], 0.0),
                pfa,
                scene.covariance.basis(),
                gamma,
            ) {
                Ok(v) => v,
                Err(Error::SubCriticalSpike { .. }) => f64::NAN,
                Err(e) => return Err(e),
            };
            table.rows.push(vec![
                Cell::Real(db),
                Cell::Real(pfa),
                Cell::Real(hits as f64 / plan.trials as f64),
                Cell::Real(theory),
                Cell::Int(plan.trials as i64),
            ]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan(trials: usize) -> TrialPlan {
        TrialPlan::new(ScenarioConfig::preset("ridge-128").unwrap(), trials, 17)
    }

    fn quick() -> SweepOptions {
        SweepOptions {
            n_multiples: vec![1, 2],
            doppler_points: 5,
            angle_points: 7,
            snr_db: vec![-10.0, 10.0, 30.0],
            p_fa: vec![1e-3, 1e-1],
            ..SweepOptions::default()
        }
    }

    #[test]
    fn zero_trials_give_header_only() {
        let table = sweep(&small_plan(0), Axis::N, &quick()).unwrap();
        assert!(table.rows.is_empty());
        let csv = table.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("n,gamma,rho_shrinkage,bound_shrinkage"));
        let snr = sweep(&small_plan(0), Axis::Snr, &quick()).unwrap();
        assert_eq!(snr.to_csv().unwrap().trim(), "snr_db,p_fa,empirical_pd,theoretical_pd,trials");
    }

    #[test]
    fn n_axis_rows_and_bounds() {
        let table = sweep(&small_plan(3), Axis::N, &quick()).unwrap();
        assert_eq!(table.column("n").unwrap(), vec![128.0, 256.0]);
        for kind in ["shrinkage", "rcml"] {
            let rho = table.column(&format!("rho_{kind}")).unwrap();
            let bound = table.column(&format!("bound_{kind}")).unwrap();
            for (r, b) in rho.iter().zip(&bound) {
                assert!(*r <= 1.0 && *r >= *b, "{r} vs {b}");
            }
        }
        let csv = table.to_csv().unwrap();
        assert_eq!(validate_csv(&csv, &table.header).unwrap(), 2);
    }

    #[test]
    fn grid_sweeps_have_one_row_per_point() {
        let d = sweep(&small_plan(2), Axis::Doppler, &quick()).unwrap();
        assert_eq!(d.column("doppler").unwrap(), vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
        let a = sweep(&small_plan(2), Axis::Angle, &quick()).unwrap();
        assert_eq!(a.rows.len(), 7);
        assert_eq!(a.column("angle_deg").unwrap()[0], -90.0);
    }

    #[test]
    fn snr_sweep_is_monotone_in_threshold() {
        let mut plan = small_plan(40);
        plan.scenario = ScenarioConfig::preset("noise-64").unwrap().with_n_train(256);
        let table = sweep(&plan, Axis::Snr, &quick()).unwrap();
        assert_eq!(table.rows.len(), 6);
        let pd = table.column("empirical_pd").unwrap();
        let theory = table.column("theoretical_pd").unwrap();
        for k in 0..3 {
            assert!(pd[2 * k] <= pd[2 * k + 1]);
            assert!(theory[2 * k] <= theory[2 * k + 1]);
        }
        assert_eq!(pd[4], 1.0);
        assert_eq!(pd[5], 1.0);
        assert!(theory[0] < theory[1]);
    }

    #[test]
    fn estimator_subset_and_metric_subset() {
        let mut plan = small_plan(2);
        plan.estimators = vec![EstimatorKind::Rcml];
        plan.metrics = vec![Metric::Rho];
        let table = sweep(&plan, Axis::N, &quick()).unwrap();
        assert_eq!(table.header, vec!["n", "gamma", "rho_rcml", "trials"]);
        plan.estimators.clear();
        assert!(sweep(&plan, Axis::N, &quick()).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("rcml".parse::<EstimatorKind>().unwrap(), EstimatorKind::Rcml);
        assert_eq!("angle".parse::<Axis>().unwrap(), Axis::Angle);
        assert!("x".parse::<Axis>().is_err());
        assert_eq!(Cell::Real(0.1).to_string(), "0.1");
        assert_eq!(Cell::Real(1e-300).to_string(), "1e-300");
        assert_eq!(Cell::Int(3).to_string(), "3");
    }
}
