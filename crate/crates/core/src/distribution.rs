//! Prior models for the target angle and the distribution moments that feed
//! the Bayesian Fisher information.
//!
//! Two continuous families are supported, a mixture of uniform intervals and
//! a mixture of equal-width Gaussians, plus a point mass used by the
//! deterministic-angle benchmark. All integrals are composite trapezoid rules
//! on uniform grids restricted to the support of the density.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{
    check_angle, steering_derivative_unchecked, steering_unchecked, ArrayConfig, CMatrix,
};
use crate::error::{Error, Result};

/// Gaussian components are integrated over `mean ± GAUSS_SPAN·σ`.
pub const GAUSS_SPAN: f64 = 10.0;
const WEIGHT_TOL: f64 = 1e-12;
/// Endpoint tolerance used when testing interval membership.
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetDistribution {
    MixtureUniform {
        intervals: Vec<(f64, f64)>,
        weights: Vec<f64>,
    },
    MixtureGaussian {
        means: Vec<f64>,
        sigma: f64,
        weights: Vec<f64>,
    },
    PointMass {
        theta0: f64,
    },
}

impl TargetDistribution {
    pub fn uniform(intervals: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        let d = Self::MixtureUniform { intervals, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(means: Vec<f64>, sigma: f64, weights: Vec<f64>) -> Result<Self> {
        let d = Self::MixtureGaussian {
            means,
            sigma,
            weights,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(theta0: f64) -> Result<Self> {
        check_angle(theta0)?;
        Ok(Self::PointMass { theta0 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::MixtureUniform { intervals, weights } => {
                check_weights(weights, intervals.len())?;
                for &(lo, hi) in intervals {
                    if !(lo < hi) {
                        return bad(format!("interval [{lo}, {hi}] is empty"));
                    }
                    if check_angle(lo).is_err() || check_angle(hi).is_err() {
                        return bad(format!("interval [{lo}, {hi}] leaves [-pi/2, pi/2]"));
                    }
                }
                let mut sorted = intervals.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in sorted.windows(2) {
                    if w[1].0 < w[0].1 - EDGE_TOL {
                        return bad(format!(
                            "intervals [{}, {}] and [{}, {}] overlap",
                            w[0].0, w[0].1, w[1].0, w[1].1
                        ));
                    }
                }
                Ok(())
            }
            Self::MixtureGaussian {
                means,
                sigma,
                weights,
            } => {
                check_weights(weights, means.len())?;
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                for &m in means {
                    if check_angle(m).is_err() {
                        return bad(format!("mean {m} leaves [-pi/2, pi/2]"));
                    }
                }
                Ok(())
            }
            Self::PointMass { theta0 } => check_angle(*theta0),
        }
    }

    pub fn n_components(&self) -> usize {
        match self {
            Self::MixtureUniform { weights, .. } | Self::MixtureGaussian { weights, .. } => {
                weights.len()
            }
            Self::PointMass { .. } => 1,
        }
    }

    /// Mixture density at `theta`. The point mass has no density and reports
    /// zero everywhere; callers that need its location use [`Self::modes`].
    pub fn pdf(&self, theta: f64) -> f64 {
        match self {
            Self::MixtureUniform { intervals, weights } => intervals
                .iter()
                .zip(weights)
                .filter(|((lo, hi), _)| theta >= lo - EDGE_TOL && theta <= hi + EDGE_TOL)
                .map(|((lo, hi), p)| p / (hi - lo))
                .sum(),
            Self::MixtureGaussian {
                means,
                sigma,
                weights,
            } => {
                let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
                means
                    .iter()
                    .zip(weights)
                    .map(|(m, p)| {
                        let z = (theta - m) / sigma;
                        p * norm * (-0.5 * z * z).exp()
                    })
                    .sum()
            }
            Self::PointMass { .. } => 0.0,
        }
    }

    /// `ln f(θ)`, evaluated without underflow for Gaussian mixtures.
    pub fn log_pdf(&self, theta: f64) -> f64 {
        match self {
            Self::MixtureGaussian {
                means,
                sigma,
                weights,
            } => {
                let log_norm = -((2.0 * PI).sqrt() * sigma).ln();
                let terms: Vec<f64> = means
                    .iter()
                    .zip(weights)
                    .map(|(m, p)| {
                        let z = (theta - m) / sigma;
                        p.ln() + log_norm - 0.5 * z * z
                    })
                    .collect();
                log_sum_exp(&terms)
            }
            _ => self.pdf(theta).ln(),
        }
    }

    /// Score `∂ ln f(θ) / ∂θ`.
    pub fn log_pdf_grad(&self, theta: f64) -> Result<f64> {
        match self {
            Self::MixtureUniform { .. } => {
                if self.pdf(theta) > 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::ZeroDensity(theta))
                }
            }
            Self::MixtureGaussian {
                means,
                sigma,
                weights,
            } => {
                let s2 = sigma * sigma;
                let logs: Vec<f64> = means
                    .iter()
                    .zip(weights)
                    .map(|(m, p)| {
                        let z = (theta - m) / sigma;
                        p.ln() - 0.5 * z * z
                    })
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !top.is_finite() {
                    return Err(Error::ZeroDensity(theta));
                }
                let (mut num, mut den) = (0.0, 0.0);
                for (l, m) in logs.iter().zip(means) {
                    let r = (l - top).exp();
                    num += r * (m - theta) / s2;
                    den += r;
                }
                Ok(num / den)
            }
            Self::PointMass { .. } => Err(Error::ZeroDensity(theta)),
        }
    }

    /// Component centres: interval midpoints, Gaussian means or the point.
    pub fn modes(&self) -> Vec<f64> {
        match self {
            Self::MixtureUniform { intervals, .. } => {
                intervals.iter().map(|(a, b)| 0.5 * (a + b)).collect()
            }
            Self::MixtureGaussian { means, .. } => means.clone(),
            Self::PointMass { theta0 } => vec![*theta0],
        }
    }

    /// Integration segments covering the support, clipped to the angular
    /// domain and merged where they overlap.
    pub fn support_segments(&self) -> Vec<(f64, f64)> {
        let mut segs: Vec<(f64, f64)> = match self {
            Self::MixtureUniform { intervals, .. } => intervals.clone(),
            Self::MixtureGaussian { means, sigma, .. } => means
                .iter()
                .map(|m| {
                    (
                        (m - GAUSS_SPAN * sigma).max(-FRAC_PI_2),
                        (m + GAUSS_SPAN * sigma).min(FRAC_PI_2),
                    )
                })
                .collect(),
            Self::PointMass { theta0 } => vec![(*theta0, *theta0)],
        };
        segs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if matches!(self, Self::MixtureUniform { .. }) {
            return segs;
        }
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(segs.len());
        for s in segs {
            match merged.last_mut() {
                Some(last) if s.0 <= last.1 => last.1 = last.1.max(s.1),
                _ => merged.push(s),
            }
        }
        merged
    }

    /// Nearest point of the closed support to `theta`. Gaussian mixtures
    /// have full support, so `theta` is returned unchanged.
    pub fn clamp_to_support(&self, theta: f64) -> f64 {
        match self {
            Self::MixtureUniform { intervals, .. } => {
                let mut best = theta;
                let mut best_d = f64::INFINITY;
                for &(lo, hi) in intervals {
                    let c = theta.clamp(lo, hi);
                    let d = (c - theta).abs();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            }
            Self::MixtureGaussian { .. } => theta,
            Self::PointMass { theta0 } => *theta0,
        }
    }

    /// Draws one angle. Gaussian components are truncated to the angular
    /// domain by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::MixtureUniform { intervals, weights } => {
                let k = pick_component(weights, rng);
                let (lo, hi) = intervals[k];
                lo + (hi - lo) * rng.random::<f64>()
            }
            Self::MixtureGaussian {
                means,
                sigma,
                weights,
            } => {
                let k = pick_component(weights, rng);
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let theta = means[k] + sigma * z;
                    if theta.abs() <= FRAC_PI_2 {
                        return theta;
                    }
                }
            }
            Self::PointMass { theta0 } => *theta0,
        }
    }
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDistribution("no components".into()));
    }
    if weights.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} components",
            weights.len(),
            n
        )));
    }
    if let Some(p) = weights.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidDistribution(format!(
            "weights must be positive, got {p}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

fn pick_component<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in weights.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Composite trapezoid nodes and weights on `[lo, hi]`.
pub fn trapezoid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| {
        let x = if i == n - 1 { hi } else { lo + h * i as f64 };
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        (x, w)
    })
}

/// Settings for [`compute_moments`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    /// Trapezoid nodes per support segment.
    pub grid_size: usize,
    /// Half-width of the raised-cosine taper that replaces each step edge of
    /// a uniform mixture when computing the prior Fisher scalar.
    pub edge_half_width: f64,
    /// Use this value for the prior Fisher scalar instead of integrating it.
    pub lambda_override: Option<f64>,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            grid_size: 2001,
            edge_half_width: PI / 720.0,
            lambda_override: None,
        }
    }
}

pub const MIN_MOMENT_GRID: usize = 91;

/// Distribution-averaged array matrices and the prior Fisher scalar.
///
/// * `xi0 = ∫ f ‖ȧ_r‖² a_t a_tᴴ`
/// * `xi1 = xi0 + M_r ∫ f ȧ_t ȧ_tᴴ`
/// * `xi2 = M_r ∫ f ȧ_t a_tᴴ`
/// * `xi3 = M_r ∫ f a_t a_tᴴ`
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMoments {
    pub xi0: CMatrix,
    pub xi1: CMatrix,
    pub xi2: CMatrix,
    pub xi3: CMatrix,
    pub lambda: f64,
    pub grid_size: usize,
}

impl DistributionMoments {
    pub fn m_t(&self) -> usize {
        self.xi0.nrows()
    }
}

pub fn compute_moments(
    dist: &TargetDistribution,
    cfg: &ArrayConfig,
    opts: &MomentOptions,
) -> Result<DistributionMoments> {
    dist.validate()?;
    cfg.validate()?;
    if opts.grid_size < MIN_MOMENT_GRID {
        return Err(Error::InvalidConfig(format!(
            "moment grid_size must be >= {MIN_MOMENT_GRID}, got {}",
            opts.grid_size
        )));
    }
    let (m_t, m_r, d) = (cfg.m_t, cfg.m_r, cfg.spacing);
    let mut xi0 = CMatrix::zeros(m_t, m_t);
    let mut dd = CMatrix::zeros(m_t, m_t);
    let mut da = CMatrix::zeros(m_t, m_t);
    let mut aa = CMatrix::zeros(m_t, m_t);

    let mut accumulate = |theta: f64, weight: f64| {
        let a_t = steering_unchecked(theta, m_t, d);
        let ad_t = steering_derivative_unchecked(theta, m_t, d);
        let ad_r_norm = steering_derivative_unchecked(theta, m_r, d).norm_squared();
        let w = Complex64::new(weight, 0.0);
        for j in 0..m_t {
            let a_j = a_t[j].conj();
            let ad_j = ad_t[j].conj();
            for i in 0..m_t {
                let aa_ij = a_t[i] * a_j;
                aa[(i, j)] += w * aa_ij;
                xi0[(i, j)] += w * ad_r_norm * aa_ij;
                dd[(i, j)] += w * (ad_t[i] * ad_j);
                da[(i, j)] += w * (ad_t[i] * a_j);
            }
        }
    };

    match dist {
        TargetDistribution::PointMass { theta0 } => accumulate(*theta0, 1.0),
        _ => {
            for (lo, hi) in dist.support_segments() {
                for (theta, w) in trapezoid(lo, hi, opts.grid_size) {
                    let f = dist.pdf(theta);
                    if f > 0.0 {
                        accumulate(theta, w * f);
                    }
                }
            }
        }
    }

    let mr = Complex64::new(m_r as f64, 0.0);
    let xi0 = hermitian_part(&xi0);
    let xi1 = hermitian_part(&(&xi0 + &dd * mr));
    let xi2 = da * mr;
    let xi3 = hermitian_part(&(aa * mr));
    let lambda = match opts.lambda_override {
        Some(v) if v >= 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(Error::InvalidConfig(format!(
                "lambda_override must be finite and >= 0, got {v}"
            )))
        }
        None => prior_fisher(dist, opts)?,
    };
    Ok(DistributionMoments {
        xi0,
        xi1,
        xi2,
        xi3,
        lambda,
        grid_size: opts.grid_size,
    })
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Prior Fisher scalar `Λ = ∫ f (∂ ln f / ∂θ)² dθ`.
///
/// Uniform mixtures have step edges whose squared score is not integrable;
/// each edge is replaced by a raised-cosine taper of half-width
/// `edge_half_width` and the integral is taken over the tapers (the flat
/// parts contribute nothing).
pub fn prior_fisher(dist: &TargetDistribution, opts: &MomentOptions) -> Result<f64> {
    match dist {
        TargetDistribution::PointMass { .. } => Ok(0.0),
        TargetDistribution::MixtureGaussian { .. } => {
            let mut total = 0.0;
            for (lo, hi) in dist.support_segments() {
                for (theta, w) in trapezoid(lo, hi, opts.grid_size) {
                    let f = dist.pdf(theta);
                    if f > 0.0 {
                        let s = dist.log_pdf_grad(theta)?;
                        total += w * f * s * s;
                    }
                }
            }
            Ok(total)
        }
        TargetDistribution::MixtureUniform { .. } => {
            let eps = opts.edge_half_width;
            let edges = uniform_edges(dist);
            check_taper_fits(dist, eps)?;
            let mut total = 0.0;
            for edge in &edges {
                for (theta, w) in trapezoid(edge.at - eps, edge.at + eps, opts.grid_size) {
                    total += w * edge.taper_fisher_density(theta, eps);
                }
            }
            Ok(total)
        }
    }
}

/// A jump of the piecewise-constant uniform-mixture density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEdge {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

impl DensityEdge {
    /// Tapered density and its derivative at `theta` for a taper spanning
    /// `[at - eps, at + eps]`.
    pub fn taper(&self, theta: f64, eps: f64) -> (f64, f64) {
        let width = 2.0 * eps;
        let t = (theta - (self.at - eps)).clamp(0.0, width);
        let phase = PI * t / (2.0 * width);
        let jump = self.right - self.left;
        let f = self.left + jump * phase.sin().powi(2);
        let df = jump * (PI / (2.0 * width)) * (2.0 * phase).sin();
        (f, df)
    }

    /// `f'² / f` of the taper, written so that the zero-density end of a
    /// taper evaluates to its finite limit.
    pub fn taper_fisher_density(&self, theta: f64, eps: f64) -> f64 {
        let width = 2.0 * eps;
        let t = (theta - (self.at - eps)).clamp(0.0, width);
        let phase = PI * t / (2.0 * width);
        let (s2, c2) = (phase.sin().powi(2), phase.cos().powi(2));
        let k2 = (PI / width).powi(2);
        if self.left == 0.0 {
            self.right * k2 * c2
        } else if self.right == 0.0 {
            self.left * k2 * s2
        } else {
            let jump = self.right - self.left;
            jump * jump * k2 * s2 * c2 / (self.left * c2 + self.right * s2)
        }
    }
}

pub fn uniform_edges(dist: &TargetDistribution) -> Vec<DensityEdge> {
    let TargetDistribution::MixtureUniform { intervals, .. } = dist else {
        return Vec::new();
    };
    let mut points: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= EDGE_TOL);
    points
        .into_iter()
        .map(|at| DensityEdge {
            at,
            left: open_density(dist, at, -1.0),
            right: open_density(dist, at, 1.0),
        })
        .filter(|e| e.left != e.right)
        .collect()
}

/// Density just to one side of `at`, ignoring the closed endpoint.
fn open_density(dist: &TargetDistribution, at: f64, side: f64) -> f64 {
    let TargetDistribution::MixtureUniform { intervals, weights } = dist else {
        return 0.0;
    };
    intervals
        .iter()
        .zip(weights)
        .filter(|((lo, hi), _)| {
            if side < 0.0 {
                *lo < at - EDGE_TOL && *hi >= at - EDGE_TOL
            } else {
                *lo <= at + EDGE_TOL && *hi > at + EDGE_TOL
            }
        })
        .map(|((lo, hi), p)| p / (hi - lo))
        .sum()
}

fn check_taper_fits(dist: &TargetDistribution, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "edge_half_width must be positive, got {eps}"
        )));
    }
    let edges = uniform_edges(dist);
    for w in edges.windows(2) {
        if w[1].at - w[0].at < 2.0 * eps {
            return Err(Error::InvalidConfig(format!(
                "edge tapers of half-width {eps} overlap between {} and {}",
                w[0].at, w[1].at
            )));
        }
    }
    Ok(())
}
