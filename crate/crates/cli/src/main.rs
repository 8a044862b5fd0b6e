mod args;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use log::{info, warn};
use serde::Serialize;

use spikecov::detector::{detect_with_basis, theoretical_pd, training_decomposition, DetectionReport, DetectorConfig};
use spikecov::harness::bench::{bench_scaling_seeded, write_scaling_csv};
use spikecov::harness::clt::verify_clt;
use spikecov::harness::sweep::{sweep, validate_csv, EstimatorKind, SweepOptions, TrialPlan};
use spikecov::rcml::rcml_estimate;
use spikecov::rmt::io::validate_files;
use spikecov::rmt::{eigh, sample_covariance, AspectRatio};
use spikecov::scenario::{amplitude_for_snr, inject_target, DataCube, ScenarioConfig, Scene};
use spikecov::shrinkage::{shrink_spectrum, CovarianceEstimate, EstimateSummary, SpikedModel};
use spikecov::{c64, Error};

use args::{BenchArgs, CltArgs, Cli, Command, Common, DetectArgs, EstimateArgs, SweepArgs};
use manifest::RunManifest;

const DEFAULT_SCENARIO: &str = "challenge-synthetic";

/// Failure carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(e) if !e.is_config_error() => 3,
            Some(_) => 2,
            None => 2,
        };
        Self { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        error: anyhow!(msg.into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

/// Worker count from `SPIKECOV_THREADS`; rayon's default otherwise.
fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SPIKECOV_THREADS") {
        let threads: usize = v.parse().with_context(|| format!("SPIKECOV_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn run(command: Command) -> Outcome<()> {
    let name = command.name();
    match command {
        Command::Estimate(a) => cmd_estimate(name, a),
        Command::Sweep(a) => cmd_sweep(name, a),
        Command::Detect(a) => cmd_detect(name, a),
        Command::Bench(a) => cmd_bench(name, a),
        Command::VerifyClt(a) => cmd_verify_clt(name, a),
    }
}

fn load_scenario(common: &Common) -> Outcome<(ScenarioConfig, String)> {
    let (cfg, source) = match (&common.config, &common.scenario) {
        (Some(path), _) => {
            let cfg = ScenarioConfig::load(path)
                .map_err(|e| config_error(format!("cannot load scenario {}: {e}", path.display())))?;
            (cfg, path.display().to_string())
        }
        (None, Some(name)) => (ScenarioConfig::preset(name).map_err(|e| config_error(e.to_string()))?, format!("preset:{name}")),
        (None, None) => (ScenarioConfig::preset(DEFAULT_SCENARIO)?, format!("preset:{DEFAULT_SCENARIO}")),
    };
    Ok((cfg.with_seed(common.seed), source))
}

fn prepare_out_dir(dir: &Path) -> Outcome<()> {
    fs::create_dir_all(dir).map_err(|e| config_error(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<PathBuf> {
    fs::write(path, serde_json::to_string_pretty(value).map_err(Error::from)?)
        .map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn check_json(path: &Path) -> Outcome<()> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    serde_json::from_str::<serde_json::Value>(&text).map_err(Error::from)?;
    Ok(())
}

fn build_scene(cfg: ScenarioConfig) -> Outcome<Scene> {
    let scene = Scene::build(cfg)?;
    for w in &scene.warnings {
        warn!("{w}");
    }
    Ok(scene)
}

/// Training and test data from a file or from a fresh draw of the scene.
fn load_cube(data: Option<&Path>, cfg: &ScenarioConfig, n: Option<usize>, trial: u64) -> Outcome<(DataCube, Option<Scene>)> {
    match data {
        Some(stem) => {
            let cube = DataCube::read(stem).map_err(|e| config_error(format!("cannot read data {}: {e}", stem.display())))?;
            Ok((cube, None))
        }
        None => {
            let cfg = match n {
                Some(n) => cfg.clone().with_n_train(n),
                None => cfg.clone(),
            };
            let scene = build_scene(cfg)?;
            let cube = scene.draw(trial);
            Ok((cube, Some(scene)))
        }
    }
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    scenario: &'a str,
    estimator: EstimatorKind,
    p: usize,
    n: usize,
    #[serde(flatten)]
    summary: EstimateSummary,
    warnings: Vec<String>,
}

fn cmd_estimate(name: &str, a: EstimateArgs) -> Outcome<()> {
    let (cfg, source) = load_scenario(&a.common)?;
    prepare_out_dir(&a.common.out_dir)?;
    let (cube, _) = load_cube(a.data.as_deref(), &cfg, a.n, 0)?;
    let (p, n) = (cube.p(), cube.n_train());
    let cov = sample_covariance(cube.training.as_ref())?;
    let ratio = AspectRatio::new(p, n)?;
    let decomp = eigh(cov.matrix())?;
    let shrunk = shrink_spectrum(&decomp, ratio)?;
    let kind: EstimatorKind = a.estimator.into();
    let estimate: CovarianceEstimate = match kind {
        EstimatorKind::Shrinkage => {
            if a.rank.is_some() {
                warn!("--rank is ignored by the shrinkage estimator");
            }
            shrunk
        }
        EstimatorKind::Rcml => rcml_estimate(&decomp, shrunk.noise(), a.rank.unwrap_or(shrunk.spike_count()))?,
    };
    let warnings: Vec<String> = estimate.warnings().iter().map(ToString::to_string).collect();
    for w in &warnings {
        warn!("{w}");
    }
    let dir = &a.common.out_dir;
    let (bin, sidecar) = estimate.write(&dir.join("estimate"))?;
    let summary = write_json(
        &dir.join("summary.json"),
        &EstimateOutput {
            scenario: &cfg.name,
            estimator: kind,
            p,
            n,
            summary: estimate.summary(),
            warnings,
        },
    )?;
    validate_files(&dir.join("estimate"))?;
    check_json(&summary)?;
    info!("sigma2_hat = {:e}, spikes = {}", estimate.noise().sigma2_hat, estimate.spike_count());
    finish(dir, RunManifest::new(name, &source, a.common.seed, vec![bin, sidecar, summary]))
}

fn cmd_sweep(name: &str, a: SweepArgs) -> Outcome<()> {
    let (mut cfg, source) = load_scenario(&a.common)?;
    if let Some(n) = a.n {
        cfg = cfg.with_n_train(n);
    }
    prepare_out_dir(&a.common.out_dir)?;
    let mut plan = TrialPlan::new(cfg, a.trials, a.common.seed);
    if let Some(e) = a.estimator {
        plan.estimators = vec![e.into()];
    }
    let mut options = SweepOptions {
        doppler_points: a.doppler_grid,
        angle_points: a.angle_grid,
        rcml_rank: a.rank,
        detector_rank: a.rank,
        p_fa: a.pfa.clone(),
        ..SweepOptions::default()
    };
    if let Some(snr) = a.snr_db.clone() {
        options.snr_db = snr;
    }
    if let Some(fd) = a.doppler {
        options.target_doppler = fd;
    }
    if let Some(theta) = a.angle_deg {
        options.target_angle_deg = theta;
    }
    if a.trials == 0 {
        warn!("zero trials requested; writing the header only");
    }
    let axis = a.axis.into();
    let table = sweep(&plan, axis, &options)?;
    let csv = table.to_csv()?;
    let path = a.common.out_dir.join(format!("sweep_{}.csv", axis_label(axis)));
    fs::write(&path, &csv).map_err(Error::from)?;
    let rows = validate_csv(&fs::read_to_string(&path).map_err(Error::from)?, &table.header)?;
    if rows != table.rows.len() {
        return Err(Error::Format(format!("{} holds {rows} rows, expected {}", path.display(), table.rows.len())).into());
    }
    finish(&a.common.out_dir, RunManifest::new(name, &source, a.common.seed, vec![path]))?;
    print!("{csv}");
    Ok(())
}

fn axis_label(axis: spikecov::harness::sweep::Axis) -> &'static str {
    use spikecov::harness::sweep::Axis;
    match axis {
        Axis::N => "n",
        Axis::Doppler => "doppler",
        Axis::Angle => "angle",
        Axis::Snr => "snr",
    }
}

#[derive(Serialize)]
struct DetectOutput {
    scenario: String,
    p: usize,
    n: usize,
    snr_db: Option<f64>,
    angle_deg: f64,
    doppler: f64,
    sigma2_hat: f64,
    reports: Vec<DetectionReport>,
}

fn cmd_detect(name: &str, a: DetectArgs) -> Outcome<()> {
    let (cfg, source) = load_scenario(&a.common)?;
    prepare_out_dir(&a.common.out_dir)?;
    if a.pfa.is_empty() {
        return Err(config_error("--pfa needs at least one value"));
    }
    let theta = a.angle_deg.unwrap_or(spikecov::scenario::DEFAULT_TARGET_ANGLE_DEG);
    let fd = a.doppler.unwrap_or(spikecov::scenario::DEFAULT_TARGET_DOPPLER);
    let target = cfg.steering(theta, fd).map_err(|e| config_error(e.to_string()))?;
    let (cube, scene) = load_cube(a.data.as_deref(), &cfg, a.n, a.trial)?;
    if target.dim() != cube.p() {
        return Err(config_error(format!("target dimension {} does not match data dimension {}", target.dim(), cube.p())));
    }
    let amplitude = match a.snr_db {
        Some(db) => {
            let sigma2 = scene.as_ref().map(|s| s.covariance.sigma2()).unwrap_or(cfg.sigma2);
            c64::new(amplitude_for_snr(db, sigma2, cube.p()), 0.0)
        }
        None => c64::new(0.0, 0.0),
    };
    let cube = inject_target(cube, &target, amplitude)?;
    let (p, n) = (cube.p(), cube.n_train());
    let (decomp, noise) = training_decomposition(cube.training.as_ref())?;
    let ratio = AspectRatio::new(p, n)?;
    let rank = match a.rank {
        Some(r) => r,
        None => {
            let edge = ratio.bulk_edge();
            decomp.eigenvalues().iter().take_while(|&&l| l / noise.sigma2_hat > edge).count()
        }
    };
    let clutter = scene.as_ref().map(|s| s.covariance.rank() > 0).unwrap_or(true);
    if rank == 0 && clutter {
        warn!("rank 0 disables the clutter projection on a scene that may contain clutter");
    }
    let model: Option<SpikedModel> = scene.as_ref().and_then(|s| s.covariance.spiked_model().ok());
    let mut reports = Vec::with_capacity(a.pfa.len());
    for &pfa in &a.pfa {
        let config = DetectorConfig::new(rank, pfa, noise).map_err(|e| config_error(e.to_string()))?;
        let mut report = detect_with_basis(&cube.test_snapshot(0), &target, decomp.eigenvectors(), &config)?;
        if let (Some(model), Some(scene)) = (&model, &scene) {
            report.theoretical_pd = theoretical_pd(model, &target, amplitude, pfa, scene.covariance.basis(), ratio.gamma()).ok();
        }
        reports.push(report);
    }
    let out = DetectOutput {
        scenario: cfg.name.clone(),
        p,
        n,
        snr_db: a.snr_db,
        angle_deg: theta,
        doppler: fd,
        sigma2_hat: noise.sigma2_hat,
        reports,
    };
    let path = write_json(&a.common.out_dir.join("detection.json"), &out)?;
    check_json(&path)?;
    finish(&a.common.out_dir, RunManifest::new(name, &source, a.common.seed, vec![path]))?;
    println!("{}", serde_json::to_string_pretty(&out).map_err(Error::from)?);
    Ok(())
}

fn cmd_bench(name: &str, a: BenchArgs) -> Outcome<()> {
    prepare_out_dir(&a.out_dir)?;
    let rows = bench_scaling_seeded(&a.p, a.reps, a.seed).map_err(|e| config_error(e.to_string()))?;
    let mut buf = Vec::new();
    write_scaling_csv(&mut buf, &rows)?;
    let text = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
    let path = a.out_dir.join("bench.csv");
    fs::write(&path, &text).map_err(Error::from)?;
    let header: Vec<String> = ["p", "n", "reps", "eig_seconds", "shrink_seconds", "eig_ratio", "shrink_ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    validate_csv(&fs::read_to_string(&path).map_err(Error::from)?, &header)?;
    finish(&a.out_dir, RunManifest::new(name, "-", a.seed, vec![path]))?;
    print!("{text}");
    Ok(())
}

fn cmd_verify_clt(name: &str, a: CltArgs) -> Outcome<()> {
    prepare_out_dir(&a.out_dir)?;
    let model = SpikedModel::new(a.p, 1.0, a.spikes.clone()).map_err(|e| config_error(e.to_string()))?;
    let report = verify_clt(&model, a.gamma, a.p, a.trials, a.seed)?;
    for s in &report.spikes {
        println!(
            "spike {:>8.4}: mean eta {:.6} (limit {:.6}), K-S D = {:.4}, p = {:.4}",
            s.spike, s.mean_shrunk, s.params.eta_of_beta, s.ks.statistic, s.ks.p_value
        );
    }
    let path = write_json(&a.out_dir.join("clt.json"), &report)?;
    check_json(&path)?;
    finish(&a.out_dir, RunManifest::new(name, "-", a.seed, vec![path]))
}

fn finish(dir: &Path, manifest: RunManifest) -> Outcome<()> {
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    check_json(&path)?;
    Ok(())
}
