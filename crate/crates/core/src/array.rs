//! Uniform linear array model: steering vectors, their angular derivatives,
//! transmit beampattern and echo synthesis.
//!
//! Element phases are referenced to the array centre, so element `i` of an
//! `m`-element array carries the offset `i - (m - 1) / 2`. With this choice
//! `a(θ)ᴴ ȧ(θ) = 0` for every θ, which the Fisher information blocks rely on.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Slack allowed on the angular domain so that grid endpoints computed in
/// degrees and converted to radians are accepted.
const ANGLE_SLACK: f64 = 1e-12;

pub fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && theta.abs() <= FRAC_PI_2 + ANGLE_SLACK {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(theta))
    }
}

/// Physical description of the colocated MIMO radar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub m_t: usize,
    pub m_r: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub l_samples: usize,
    /// Total transmit energy `‖X‖_F²`.
    pub power: f64,
    /// PAPR threshold, at least 1.
    pub papr: f64,
    /// Per-entry complex noise variance (linear scale).
    pub noise_power: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ArrayConfig {
    pub fn new(m_t: usize, m_r: usize, l_samples: usize, power: f64, papr: f64) -> Self {
        Self {
            m_t,
            m_r,
            spacing: 0.5,
            l_samples,
            power,
            papr,
            noise_power: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.m_t == 0 || self.m_r == 0 {
            return bad("antenna counts must be at least 1");
        }
        if self.l_samples == 0 {
            return bad("l_samples must be at least 1");
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad("power must be positive");
        }
        if !(self.papr >= 1.0) {
            return bad("papr threshold must be >= 1");
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise_power must be positive");
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad("spacing must be positive");
        }
        Ok(())
    }

    /// Per-element power cap `κP / (M_t L)`.
    pub fn element_bound(&self) -> f64 {
        self.papr * self.power / (self.m_t * self.l_samples) as f64
    }

    pub fn with_papr(&self, papr: f64) -> Self {
        Self {
            papr,
            ..self.clone()
        }
    }
}

/// Space-time transmit waveform, `m_t × l_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform(pub CMatrix);

impl Waveform {
    pub fn zeros(m_t: usize, l_samples: usize) -> Self {
        Self(CMatrix::zeros(m_t, l_samples))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn m_t(&self) -> usize {
        self.0.nrows()
    }

    pub fn l_samples(&self) -> usize {
        self.0.ncols()
    }

    /// `‖X‖_F²`.
    pub fn energy(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn max_element_power(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    /// Peak-to-average power ratio of the entries; zero for the zero matrix.
    pub fn papr(&self) -> f64 {
        let energy = self.energy();
        if energy == 0.0 {
            return 0.0;
        }
        self.max_element_power() * self.0.len() as f64 / energy
    }

    /// Transmit covariance `X Xᴴ`.
    pub fn covariance(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }

    pub fn check_shape(&self, cfg: &ArrayConfig) -> Result<()> {
        if self.m_t() != cfg.m_t || self.l_samples() != cfg.l_samples {
            return Err(dim_err(
                format!("{}x{}", cfg.m_t, cfg.l_samples),
                format!("{}x{}", self.m_t(), self.l_samples()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVector,
    pub angle: f64,
}

#[inline]
fn centred_offset(i: usize, m: usize) -> f64 {
    i as f64 - (m as f64 - 1.0) / 2.0
}

/// Steering vector of an `m`-element centred ULA toward `theta`.
pub fn steering(theta: f64, m: usize, spacing: f64) -> Result<SteeringVector> {
    check_angle(theta)?;
    Ok(SteeringVector {
        entries: steering_unchecked(theta, m, spacing),
        angle: theta,
    })
}

pub(crate) fn steering_unchecked(theta: f64, m: usize, spacing: f64) -> CVector {
    let step = 2.0 * PI * spacing * theta.sin();
    CVector::from_fn(m, |i, _| {
        Complex64::from_polar(1.0, step * centred_offset(i, m))
    })
}

/// Analytic `∂a(θ)/∂θ`.
pub fn steering_derivative(theta: f64, m: usize, spacing: f64) -> Result<CVector> {
    check_angle(theta)?;
    Ok(steering_derivative_unchecked(theta, m, spacing))
}

pub(crate) fn steering_derivative_unchecked(theta: f64, m: usize, spacing: f64) -> CVector {
    let step = 2.0 * PI * spacing * theta.sin();
    let slope = 2.0 * PI * spacing * theta.cos();
    CVector::from_fn(m, |i, _| {
        let k = centred_offset(i, m);
        Complex64::new(0.0, slope * k) * Complex64::from_polar(1.0, step * k)
    })
}

/// Transmit power toward `theta`: `‖a_tᴴ(θ) X‖²`.
pub fn beampattern(x: &Waveform, theta: f64, spacing: f64) -> Result<f64> {
    check_angle(theta)?;
    let a = steering_unchecked(theta, x.m_t(), spacing);
    Ok(beampattern_with(x, &a))
}

/// Beampattern for a precomputed transmit steering vector.
pub fn beampattern_with(x: &Waveform, a: &CVector) -> f64 {
    (a.adjoint() * x.matrix()).norm_squared()
}

/// Noisy echo `ς a_r(θ) a_tᴴ(θ) X + Z` with `Z` circular Gaussian of total
/// per-entry variance `noise_power`.
pub fn synthesize_received<R: Rng + ?Sized>(
    x: &Waveform,
    m_r: usize,
    spacing: f64,
    theta: f64,
    amplitude: Complex64,
    noise_power: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_angle(theta)?;
    if !(noise_power >= 0.0) {
        return Err(Error::InvalidConfig("noise_power must be >= 0".into()));
    }
    let mut y = noiseless_echo(x, m_r, spacing, theta, amplitude);
    add_noise(&mut y, noise_power, rng);
    Ok(y)
}

pub(crate) fn noiseless_echo(
    x: &Waveform,
    m_r: usize,
    spacing: f64,
    theta: f64,
    amplitude: Complex64,
) -> CMatrix {
    let a_t = steering_unchecked(theta, x.m_t(), spacing);
    let a_r = steering_unchecked(theta, m_r, spacing);
    let row = a_t.adjoint() * x.matrix();
    (a_r * amplitude) * row
}

pub(crate) fn add_noise<R: Rng + ?Sized>(y: &mut CMatrix, noise_power: f64, rng: &mut R) {
    let scale = (noise_power / 2.0).sqrt();
    for z in y.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(scale * re, scale * im);
    }
}
