//! MAP angle estimation and Monte-Carlo mean-square error.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::array::{add_noise, noiseless_echo, steering_unchecked, ArrayConfig, CMatrix, CVector, Waveform};
use crate::bounds::pcrb_theta;
use crate::distribution::{DistributionMoments, TargetDistribution};
use crate::error::{dim_err, Error, Result};
use crate::grid::AngularGrid;

/// Grid MAP estimator with the amplitude profiled out.
///
/// The objective at θ is `|a_rᴴ Y Xᴴ a_t|² / (σ² M_r ‖a_tᴴ X‖²) + ln f(θ)`.
#[derive(Debug, Clone)]
pub struct MapEstimator {
    grid: Vec<f64>,
    cell: f64,
    /// `Xᴴ a_t(θ)` per grid point, conjugated for the inner product.
    tx: Vec<CVector>,
    rx: Vec<CVector>,
    /// `σ² M_r ‖a_tᴴ X‖²`.
    norm: Vec<f64>,
    log_prior: Vec<f64>,
    dist: TargetDistribution,
    refine: bool,
    m_r: usize,
}

impl MapEstimator {
    pub fn new(
        x: &Waveform,
        dist: &TargetDistribution,
        grid: &AngularGrid,
        m_r: usize,
        spacing: f64,
        noise_power: f64,
        refine: bool,
    ) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(Error::InvalidConfig("noise_power must be positive".into()));
        }
        let points = grid.points().to_vec();
        // a point mass carries no usable prior shape, so the grid search is
        // driven by the likelihood alone
        let log_prior: Vec<f64> = match dist {
            TargetDistribution::PointMass { .. } => vec![0.0; points.len()],
            _ => points.iter().map(|&t| dist.log_pdf(t)).collect(),
        };
        if log_prior.iter().all(|l| !l.is_finite()) {
            return Err(Error::EmptyGrid("prior vanishes on every grid point".into()));
        }
        let mut tx = Vec::with_capacity(points.len());
        let mut rx = Vec::with_capacity(points.len());
        let mut norm = Vec::with_capacity(points.len());
        for &theta in &points {
            let a_t = steering_unchecked(theta, x.m_t(), spacing);
            let proj = x.matrix().adjoint() * &a_t;
            norm.push(noise_power * m_r as f64 * proj.norm_squared());
            tx.push(proj);
            rx.push(steering_unchecked(theta, m_r, spacing));
        }
        Ok(Self {
            grid: points,
            cell: grid.cell_width(),
            tx,
            rx,
            norm,
            log_prior,
            dist: dist.clone(),
            refine,
            m_r,
        })
    }

    fn likelihood(&self, y: &CMatrix, k: usize) -> f64 {
        if self.norm[k] <= 0.0 {
            return 0.0;
        }
        let c: Complex64 = (self.rx[k].adjoint() * y * &self.tx[k])[(0, 0)];
        c.norm_sqr() / self.norm[k]
    }

    pub fn estimate(&self, y: &CMatrix) -> Result<f64> {
        if y.nrows() != self.m_r || y.ncols() != self.tx[0].len() {
            return Err(dim_err(
                format!("{}x{}", self.m_r, self.tx[0].len()),
                format!("{}x{}", y.nrows(), y.ncols()),
            ));
        }
        let lik: Vec<f64> = (0..self.grid.len()).map(|k| self.likelihood(y, k)).collect();
        let post: Vec<f64> = lik.iter().zip(&self.log_prior).map(|(l, p)| l + p).collect();
        let (k, _) = post
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if k == usize::MAX {
            return Err(Error::EmptyGrid("no finite posterior value".into()));
        }
        let theta = self.grid[k];
        if !self.refine || k == 0 || k + 1 == self.grid.len() {
            return Ok(theta);
        }
        let neighbours_finite = post[k - 1].is_finite() && post[k + 1].is_finite();
        let v = if neighbours_finite { &post } else { &lik };
        let curv = v[k - 1] - 2.0 * v[k] + v[k + 1];
        if !(curv < 0.0) {
            return Ok(theta);
        }
        let offset = (0.5 * (v[k - 1] - v[k + 1]) / curv).clamp(-1.0, 1.0);
        let refined = theta + offset * self.cell;
        Ok(if neighbours_finite {
            refined
        } else {
            self.dist.clamp_to_support(refined)
        })
    }
}

/// One-shot MAP estimate; see [`MapEstimator`].
pub fn map_estimate(
    y: &CMatrix,
    x: &Waveform,
    dist: &TargetDistribution,
    grid: &AngularGrid,
    spacing: f64,
    noise_power: f64,
    refine: bool,
) -> Result<f64> {
    MapEstimator::new(x, dist, grid, y.nrows(), spacing, noise_power, refine)?.estimate(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleBin {
    pub angle: f64,
    pub trials: usize,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRecord {
    pub snr_db: f64,
    pub mse: f64,
    /// Sample standard deviation of the squared errors over `√trials`.
    pub std_error: f64,
    pub pcrb: f64,
    pub trials: usize,
    /// Trials grouped by the grid angle nearest to the true angle.
    pub bins: Vec<AngleBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub records: Vec<MseRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloOptions {
    pub n_trials: usize,
    pub seed: u64,
    pub refine: bool,
}

/// Amplitude magnitude giving `snr_db = 10 log10(|ς|² P / σ²)`.
pub fn amplitude_for_snr(snr_db: f64, power: f64, noise_power: f64) -> f64 {
    (10f64.powf(snr_db / 10.0) * noise_power / power).sqrt()
}

/// Monte-Carlo MSE of the MAP estimator across an SNR sweep.
///
/// Trial `n` draws from its own ChaCha stream, so reports do not depend on
/// the number of worker threads.
pub fn monte_carlo_mse(
    x: &Waveform,
    dist: &TargetDistribution,
    mom: &DistributionMoments,
    cfg: &ArrayConfig,
    grid: &AngularGrid,
    snr_list: &[f64],
    opts: &MonteCarloOptions,
) -> Result<MseReport> {
    if opts.n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    x.check_shape(cfg)?;
    let est = MapEstimator::new(x, dist, grid, cfg.m_r, cfg.spacing, cfg.noise_power, opts.refine)?;

    let outcomes: Vec<Result<(f64, Vec<f64>)>> = (0..opts.n_trials)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(n as u64);
            let theta = dist.sample(&mut rng);
            let phase = rng.random::<f64>() * TAU;
            let mut noise = CMatrix::zeros(cfg.m_r, cfg.l_samples);
            add_noise(&mut noise, cfg.noise_power, &mut rng);
            let unit = noiseless_echo(x, cfg.m_r, cfg.spacing, theta, Complex64::from_polar(1.0, phase));
            let errs = snr_list
                .iter()
                .map(|&snr| {
                    let amp = amplitude_for_snr(snr, cfg.power, cfg.noise_power);
                    let y = &unit * Complex64::new(amp, 0.0) + &noise;
                    est.estimate(&y).map(|t| (t - theta) * (t - theta))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((theta, errs))
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let n = opts.n_trials as f64;
    let mut records = Vec::with_capacity(snr_list.len());
    for (s, &snr) in snr_list.iter().enumerate() {
        let mse = outcomes.iter().map(|(_, e)| e[s]).sum::<f64>() / n;
        let var = if opts.n_trials > 1 {
            outcomes.iter().map(|(_, e)| (e[s] - mse).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let amp = amplitude_for_snr(snr, cfg.power, cfg.noise_power);
        let pcrb = pcrb_theta(x, mom, Complex64::new(amp, 0.0), cfg.noise_power)?.value;

        let mut sums = vec![(0usize, 0.0f64); grid.len()];
        for (theta, e) in &outcomes {
            let k = grid.nearest(*theta);
            sums[k].0 += 1;
            sums[k].1 += e[s];
        }
        let bins = sums
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| *c > 0)
            .map(|(k, (c, total))| AngleBin {
                angle: grid.points()[k],
                trials: *c,
                mse: total / *c as f64,
            })
            .collect();
        records.push(MseRecord {
            snr_db: snr,
            mse,
            std_error: (var / n).sqrt(),
            pcrb,
            trials: opts.n_trials,
            bins,
        });
    }
    Ok(MseReport { records })
}
