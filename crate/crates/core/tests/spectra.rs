use faer::{c64, Mat};
use proptest::prelude::*;
use rand::Rng;
use rayon::prelude::*;

use spikecov::rmt::eigen::max_abs;
use spikecov::rmt::{eigh, eigvalsh, median, mp_median, mp_pdf, sample_covariance, AspectRatio, MpLaw};
use spikecov::rng::{complex_normal_matrix, stream_rng};
use spikecov::scenario::{sample_snapshots, TrueCovariance};
use spikecov::shrinkage::{
    clt_params, estimate_noise_from_eigenvalues, shrink_eigenvalues, SpikedModel,
};

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    // 7-point Gauss / 15-point Kronrod pair
    const XK: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const WK: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    const WG: [f64; 4] = [0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469];
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut k = WK[7] * f(c);
    let mut g = WG[3] * f(c);
    for i in 0..7 {
        let pair = f(c - h * XK[i]) + f(c + h * XK[i]);
        k += WK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    let (k, g) = (k * h, g * h);
    if depth == 0 || (k - g).abs() <= tol {
        k
    } else {
        gauss_kronrod(f, a, c, 0.5 * tol, depth - 1) + gauss_kronrod(f, c, b, 0.5 * tol, depth - 1)
    }
}

fn random_hermitian(p: usize, seed: u64) -> Mat<c64> {
    let z = complex_normal_matrix(&mut stream_rng(seed, "test", p as u64), p, p);
    Mat::from_fn(p, p, |i, j| (z[(i, j)] + z[(j, i)].conj()) * 0.5)
}

#[test]
fn mp_density_integrates_to_one() {
    for gamma in [0.1, 0.25, 0.5, 0.9] {
        let law = MpLaw::new(gamma).unwrap();
        let (a, b) = law.support();
        // substitute x = a + (b - a) sin^2(t) to remove the square-root edges
        let f = |t: f64| {
            let s = t.sin();
            mp_pdf(a + (b - a) * s * s, &law) * (b - a) * 2.0 * s * t.cos()
        };
        let total = gauss_kronrod(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13, 30);
        assert!((total - 1.0).abs() < 1e-8, "gamma {gamma}: {total}");
    }
}

#[test]
fn mp_median_is_monotone_over_grid() {
    let medians: Vec<f64> = (1..=9).map(|k| mp_median(&MpLaw::new(0.1 * k as f64).unwrap())).collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn mp_median_matches_white_sample_median() {
    let x = complex_normal_matrix(&mut stream_rng(11, "training", 0), 1000, 2000);
    let cov = sample_covariance(x.as_ref()).unwrap();
    let values = eigvalsh(cov.matrix()).unwrap();
    let empirical = median(&values).unwrap();
    let theory = mp_median(&MpLaw::new(0.5).unwrap());
    assert!((empirical / theory - 1.0).abs() < 0.01, "{empirical} vs {theory}");
}

#[test]
fn sample_covariance_trace_tracks_noise_power() {
    let (p, sigma2) = (40, 2.5f64);
    let x = complex_normal_matrix(&mut stream_rng(12, "training", 0), p, 10 * p);
    let scaled = Mat::from_fn(p, 10 * p, |i, j| x[(i, j)] * sigma2.sqrt());
    let cov = sample_covariance(scaled.as_ref()).unwrap();
    assert!((cov.trace() / p as f64 / sigma2 - 1.0).abs() < 0.05);
}

#[test]
fn eigh_reconstructs_random_hermitian_matrices() {
    for p in [8usize, 64, 256] {
        let trials = if p == 256 { 20 } else { 100 };
        (0..trials as u64).into_par_iter().for_each(|seed| {
            let a = random_hermitian(p, seed);
            let d = eigh(a.as_ref()).unwrap();
            let v = d.eigenvectors();
            let gram = v.adjoint() * v;
            let eye = Mat::<c64>::from_fn(p, p, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
            assert!(max_abs((&gram - &eye).as_ref()) < 1e-10, "orthonormality p = {p}");
            let scale = max_abs(a.as_ref());
            assert!(max_abs((d.reconstruct() - &a).as_ref()) < 1e-10 * scale.max(1.0), "residual p = {p}");
        });
    }
}

#[test]
fn eigh_residual_at_fifty() {
    let a = random_hermitian(50, 99);
    let d = eigh(a.as_ref()).unwrap();
    assert!(max_abs((d.reconstruct() - &a).as_ref()) < 1e-8);
    assert!(d.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn white_spectrum_stays_inside_support() {
    let (p, sigma2) = (32usize, 1.5);
    let n = 20 * p;
    let gamma = p as f64 / n as f64;
    let (lo, hi) = (sigma2 * (1.0 - gamma.sqrt()).powi(2) * 0.8, sigma2 * (1.0 + gamma.sqrt()).powi(2) * 1.2);
    let trials = 200u64;
    let inside = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let x = complex_normal_matrix(&mut stream_rng(13, "training", t), p, n);
            let x = Mat::from_fn(p, n, |i, j| x[(i, j)] * sigma2.sqrt());
            let values = eigvalsh(sample_covariance(x.as_ref()).unwrap().matrix()).unwrap();
            values.iter().all(|&v| v >= lo && v <= hi)
        })
        .count();
    assert!(inside as f64 >= 0.99 * trials as f64, "{inside}/{trials}");
}

#[test]
fn snapshots_of_identity_have_identity_covariance() {
    let p = 4;
    let eye = Mat::<c64>::from_fn(p, p, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
    let cube = sample_snapshots(eye.as_ref(), 100_000, 5).unwrap();
    let cov = sample_covariance(cube.training.as_ref()).unwrap();
    assert!(max_abs((cov.matrix() - &eye).as_ref()) < 0.02);
}

fn spiked_eigenvalues(model: &SpikedModel, n: usize, trial: u64, root: u64) -> Vec<f64> {
    let truth = TrueCovariance::spiked(model, root);
    let x = truth.color(complex_normal_matrix(&mut stream_rng(root, "training", trial), model.p(), n).as_ref());
    eigvalsh(sample_covariance(x.as_ref()).unwrap().matrix()).unwrap()
}

#[test]
fn noise_estimate_on_pure_and_spiked_noise() {
    let (p, n) = (500, 2500);
    let ratio = AspectRatio::new(p, n).unwrap();
    for spikes in [vec![], vec![30.0, 18.0, 12.0]] {
        let model = SpikedModel::new(p, 3.0, spikes.clone()).unwrap();
        let trials = if spikes.is_empty() { 100 } else { 25 };
        let total: f64 = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let values = spiked_eigenvalues(&model, n, t, 21);
                estimate_noise_from_eigenvalues(&values, ratio).unwrap().sigma2_hat
            })
            .sum();
        let mean = total / trials as f64;
        assert!((mean / 3.0 - 1.0).abs() < 0.03, "spikes {spikes:?}: {mean}");
    }
}

#[test]
fn shrunk_spikes_converge_with_dimension() {
    let gamma = 0.2;
    let spikes = [5.0, 3.0, 2.5];
    let limits: Vec<f64> = spikes.iter().map(|&l| clt_params(l, gamma).unwrap().eta_of_beta).collect();
    let errors: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&p| {
            let n = 5 * p;
            let model = SpikedModel::new(p, 1.0, spikes.to_vec()).unwrap();
            let ratio = AspectRatio::new(p, n).unwrap();
            let trials = 24u64;
            let sums = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let values = spiked_eigenvalues(&model, n, t, 31);
                    let shrunk = shrink_eigenvalues(&values, ratio).unwrap();
                    let s2 = shrunk.noise.sigma2_hat;
                    shrunk.eigenvalues[..3].iter().map(|v| v / s2).collect::<Vec<_>>()
                })
                .reduce(|| vec![0.0; 3], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
            sums.iter()
                .zip(&limits)
                .map(|(s, l)| (s / trials as f64 - l).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[2] < errors[0], "{errors:?}");
    // mean within 5% of the limit at p = 400
    assert!(errors[2] < 0.05 * limits[2], "{errors:?}");
    for (limit, &l) in limits.iter().zip(&spikes) {
        assert!(*limit >= 1.0 && *limit <= l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shrinkage_scales_with_data(c in 0.01f64..100.0, seed in any::<u64>()) {
        let (p, n) = (24, 72);
        let mut rng = stream_rng(seed, "test", 0);
        let mut values: Vec<f64> = (0..p).map(|_| rng.random_range(0.3..2.5)).collect();
        values[0] = 12.0;
        values.sort_by(|a, b| b.total_cmp(a));
        let ratio = AspectRatio::new(p, n).unwrap();
        let base = shrink_eigenvalues(&values, ratio).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let other = shrink_eigenvalues(&scaled, ratio).unwrap();
        prop_assert_eq!(base.spike_count, other.spike_count);
        for (a, b) in base.eigenvalues.iter().zip(&other.eigenvalues) {
            prop_assert!((a * c - b).abs() <= 1e-10 * b.abs().max(1e-300));
        }
        prop_assert!(base.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
