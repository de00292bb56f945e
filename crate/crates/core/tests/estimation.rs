use num_complex::Complex64;
use priorwave_core::estimation::{amplitude_for_snr, MapEstimator, MonteCarloOptions};
use priorwave_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::PI;

fn setup(half: f64) -> (ArrayConfig, TargetDistribution, AngularGrid, Waveform, DistributionMoments) {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let d = TargetDistribution::uniform(vec![(-half, half)], vec![1.0]).unwrap();
    let grid = AngularGrid::new(361).unwrap();
    let x = solve_psbp_fair(&d, &cfg, &grid, &AdmmConfig::default(), 1).unwrap().waveform;
    let mom = compute_moments(&d, &cfg, &MomentOptions::default()).unwrap();
    (cfg, d, grid, x, mom)
}

#[test]
fn flat_prior_equals_restricted_ml() {
    let cfg = ArrayConfig::new(6, 6, 10, 1.0, 1.0);
    let x = baseline_omni(&cfg, 1).unwrap();
    let grid = AngularGrid::new(181).unwrap();
    let d = TargetDistribution::uniform(vec![(-0.4, 0.4)], vec![1.0]).unwrap();
    let est = MapEstimator::new(&x, &d, &grid, 6, 0.5, 1.0, false).unwrap();
    let ml = MapEstimator::new(&x, &TargetDistribution::point_mass(0.0).unwrap(), &grid, 6, 0.5, 1.0, false).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..20 {
        let theta = (rng.random::<f64>() - 0.5) * 0.6;
        let y = synthesize_received(&x, 6, 0.5, theta, Complex64::new(2.0, 0.0), 1.0, &mut rng).unwrap();
        let a = est.estimate(&y).unwrap();
        let b = ml.estimate(&y).unwrap();
        if b.abs() <= 0.4 {
            assert_eq!(a, b);
        } else {
            assert!(a.abs() <= 0.4 + 1e-12);
        }
    }
}

#[test]
fn noiseless_error_within_quantisation() {
    let (cfg, d, grid, x, _) = setup(PI / 18.0);
    let est = MapEstimator::new(&x, &d, &grid, cfg.m_r, 0.5, 1e-12, true).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for _ in 0..50 {
        let theta = d.sample(&mut rng);
        let y = synthesize_received(&x, 8, 0.5, theta, Complex64::new(1.0, 0.5), 0.0, &mut rng).unwrap();
        let t = est.estimate(&y).unwrap();
        assert!((t - theta).powi(2) <= grid.cell_width().powi(2) / 4.0);
    }
}

#[test]
fn mse_decreases_with_snr_and_is_reproducible() {
    let (cfg, d, grid, x, mom) = setup(PI / 36.0);
    let opts = MonteCarloOptions {
        n_trials: 200,
        seed: 8,
        refine: true,
    };
    let snrs = [0.0, 10.0, 20.0, 30.0];
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| monte_carlo_mse(&x, &d, &mom, &cfg, &grid, &snrs, &opts).unwrap());
    let b = many.install(|| monte_carlo_mse(&x, &d, &mom, &cfg, &grid, &snrs, &opts).unwrap());
    assert_eq!(a, b);
    for w in a.records.windows(2) {
        let band = 2.0 * (w[0].std_error + w[1].std_error);
        assert!(w[1].mse <= w[0].mse + band);
    }
    for r in &a.records {
        assert!(r.mse >= 0.0 && r.trials == 200);
        assert_eq!(r.bins.iter().map(|b| b.trials).sum::<usize>(), 200);
    }
}

#[test]
fn high_snr_outliers_rare() {
    let (cfg, d, grid, x, _) = setup(PI / 18.0);
    let est = MapEstimator::new(&x, &d, &grid, 8, 0.5, 1.0, true).unwrap();
    let amp = amplitude_for_snr(30.0, cfg.power, 1.0);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut outliers = 0;
    for _ in 0..500 {
        let theta = d.sample(&mut rng);
        let y = synthesize_received(&x, 8, 0.5, theta, Complex64::from_polar(amp, rng.random::<f64>() * 6.3), 1.0, &mut rng)
            .unwrap();
        if (est.estimate(&y).unwrap() - theta).abs() > 3.0 * grid.cell_width() {
            outliers += 1;
        }
    }
    assert!(outliers < 5, "{outliers} outliers");
}

#[test]
fn low_snr_estimates_stay_in_prior() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let grid = AngularGrid::new(361).unwrap();
    let d = TargetDistribution::gaussian(vec![-0.6, 0.4], PI / 90.0, vec![0.3, 0.7]).unwrap();
    let x = baseline_omni(&cfg, 1).unwrap();
    let est = MapEstimator::new(&x, &d, &grid, 8, 0.5, 1.0, true).unwrap();
    let amp = amplitude_for_snr(-60.0, cfg.power, 1.0);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut near_mode = 0;
    for _ in 0..300 {
        let theta = d.sample(&mut rng);
        let y = synthesize_received(&x, 8, 0.5, theta, Complex64::new(amp, 0.0), 1.0, &mut rng).unwrap();
        let t = est.estimate(&y).unwrap();
        if d.modes().iter().any(|m| (t - m).abs() < 3.0 * PI / 90.0) {
            near_mode += 1;
        }
    }
    assert!(near_mode as f64 >= 0.99 * 300.0);
}

#[test]
fn omni_point_target_does_not_beat_crb() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.0);
    let grid = AngularGrid::new(361).unwrap();
    let theta0 = 0.3;
    let d = TargetDistribution::point_mass(theta0).unwrap();
    let mom = compute_moments(&d, &cfg, &MomentOptions::default()).unwrap();
    let x = baseline_omni(&cfg, 1).unwrap();
    let opts = MonteCarloOptions {
        n_trials: 400,
        seed: 2,
        refine: true,
    };
    let r = &monte_carlo_mse(&x, &d, &mom, &cfg, &grid, &[20.0], &opts).unwrap().records[0];
    assert!(r.mse + 3.0 * r.std_error >= r.pcrb, "{} vs {}", r.mse, r.pcrb);
}
