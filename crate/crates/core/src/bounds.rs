//! Signal and prior Fisher information for `ω = [θ, Re ς, Im ς]` and the
//! posterior Cramér-Rao bound on θ.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::array::{CMatrix, Waveform};
use crate::distribution::DistributionMoments;
use crate::error::{dim_err, Error, Result};

/// Relative size of the imaginary residue tolerated on traces of Hermitian
/// quadratic forms.
const TRACE_IMAG_TOL: f64 = 1e-8;
/// Relative Hermitian deviation tolerated on the moment matrices.
const HERMITIAN_TOL: f64 = 1e-9;
/// Below this `Tr{Xᴴ Ξ₃ X}` the amplitude block is treated as absent.
pub const DEGENERATE_TRACE: f64 = 1e-14;

/// Blocks of the 3×3 posterior Fisher matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimBlocks {
    pub f_theta_theta: f64,
    pub f_theta_varsigma: [f64; 2],
    /// `F_ςς = c · I₂`; this is `c`.
    pub f_varsigma_varsigma: f64,
    pub b_theta_theta: f64,
}

impl FimBlocks {
    /// Full posterior matrix `F_S + F_P`.
    pub fn posterior_matrix(&self) -> Matrix3<f64> {
        let [r, i] = self.f_theta_varsigma;
        let c = self.f_varsigma_varsigma;
        Matrix3::new(
            self.f_theta_theta + self.b_theta_theta,
            r,
            i,
            r,
            c,
            0.0,
            i,
            0.0,
            c,
        )
    }
}

/// Quadratic forms `Tr{Xᴴ Ξ_k X}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traces {
    pub t0: f64,
    pub t1: f64,
    /// Not Hermitian in general, so kept complex.
    pub t2: Complex64,
    pub t3: f64,
}

fn quad_trace(x: &CMatrix, m: &CMatrix) -> Complex64 {
    // Tr{Xᴴ M X} = Σ_l x_lᴴ M x_l
    let mx = m * x;
    x.iter().zip(mx.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn real_trace(x: &CMatrix, m: &CMatrix, name: &str) -> Result<f64> {
    let t = quad_trace(x, m);
    if t.im.abs() > TRACE_IMAG_TOL * t.norm() {
        return Err(Error::Numerical(format!(
            "Tr{{Xᴴ{name}X}} has imaginary part {:e} (real {:e})",
            t.im, t.re
        )));
    }
    Ok(t.re)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let dev = (m - m.adjoint()).norm();
    if dev > HERMITIAN_TOL * m.norm().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

pub fn traces(x: &Waveform, mom: &DistributionMoments) -> Result<Traces> {
    if x.m_t() != mom.m_t() {
        return Err(dim_err(
            format!("{} transmit rows", mom.m_t()),
            format!("{} rows", x.m_t()),
        ));
    }
    check_hermitian(&mom.xi0)?;
    check_hermitian(&mom.xi1)?;
    check_hermitian(&mom.xi3)?;
    let xm = x.matrix();
    Ok(Traces {
        t0: real_trace(xm, &mom.xi0, "Ξ0")?,
        t1: real_trace(xm, &mom.xi1, "Ξ1")?,
        t2: quad_trace(xm, &mom.xi2),
        t3: real_trace(xm, &mom.xi3, "Ξ3")?,
    })
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power > 0.0 && noise_power.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "noise_power must be positive, got {noise_power}"
        )))
    }
}

/// Signal Fisher blocks plus the prior term.
///
/// The θ–ς cross block is `(2/σ²)[Re(ς* t₂), Re(jς* t₂)]` with
/// `t₂ = Tr{Xᴴ Ξ₂ X}`; it reduces to `(2/σ²) t₂ [ς_R, ς_I]` when `t₂` is real.
pub fn fim_signal(
    x: &Waveform,
    mom: &DistributionMoments,
    amplitude: Complex64,
    noise_power: f64,
) -> Result<FimBlocks> {
    check_noise(noise_power)?;
    let t = traces(x, mom)?;
    Ok(blocks_from_traces(&t, mom.lambda, amplitude, noise_power))
}

pub fn blocks_from_traces(
    t: &Traces,
    lambda: f64,
    amplitude: Complex64,
    noise_power: f64,
) -> FimBlocks {
    let g = 2.0 / noise_power;
    let cross = amplitude.conj() * t.t2;
    FimBlocks {
        f_theta_theta: g * amplitude.norm_sqr() * t.t1,
        f_theta_varsigma: [g * cross.re, -g * cross.im],
        f_varsigma_varsigma: g * t.t3,
        b_theta_theta: lambda,
    }
}

/// Bound value together with a flag for the prior-only degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    /// `Tr{Xᴴ Ξ₃ X}` vanished and the amplitude coupling was dropped.
    pub prior_only: bool,
}

/// Posterior CRB on θ with the amplitude treated as a nuisance (radians²).
pub fn pcrb_theta(
    x: &Waveform,
    mom: &DistributionMoments,
    amplitude: Complex64,
    noise_power: f64,
) -> Result<Bound> {
    check_noise(noise_power)?;
    let t = traces(x, mom)?;
    pcrb_from_traces(&t, mom.lambda, amplitude.norm_sqr(), noise_power)
}

pub fn pcrb_from_traces(t: &Traces, lambda: f64, gain: f64, noise_power: f64) -> Result<Bound> {
    let snr = 2.0 * gain / noise_power;
    let prior_only = t.t3 < DEGENERATE_TRACE;
    let schur = if prior_only {
        0.0
    } else {
        t.t2.norm_sqr() / t.t3
    };
    let info = lambda + snr * (t.t1 - schur);
    if !(info > 0.0) {
        return Err(Error::NoEnergyInSupport);
    }
    Ok(Bound {
        value: 1.0 / info,
        prior_only,
    })
}

/// Upper bound `[Λ + (2|ς|²/σ²) Tr{Xᴴ Ξ₀ X}]⁻¹` on the PCRB.
pub fn pcrb_upper_bound(
    x: &Waveform,
    mom: &DistributionMoments,
    amplitude: Complex64,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    let t = traces(x, mom)?;
    upper_from_traces(&t, mom.lambda, amplitude.norm_sqr(), noise_power)
}

pub fn upper_from_traces(t: &Traces, lambda: f64, gain: f64, noise_power: f64) -> Result<f64> {
    let info = lambda + 2.0 * gain / noise_power * t.t0;
    if !(info > 0.0) {
        return Err(Error::NoEnergyInSupport);
    }
    Ok(1.0 / info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayConfig;
    use crate::distribution::{compute_moments, MomentOptions, TargetDistribution};
    use std::f64::consts::PI;

    fn random_waveform(m: usize, l: usize, seed: u64) -> Waveform {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        Waveform(CMatrix::from_fn(m, l, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        }))
    }

    fn gaussian_moments(sigma: f64) -> DistributionMoments {
        let cfg = ArrayConfig::new(4, 4, 6, 1.0, 2.0);
        let d = TargetDistribution::gaussian(vec![0.2], sigma, vec![1.0]).unwrap();
        compute_moments(&d, &cfg, &MomentOptions::default()).unwrap()
    }

    #[test]
    fn zero_waveform_is_prior_only() {
        let sigma = PI / 90.0;
        let mom = gaussian_moments(sigma);
        let x = Waveform::zeros(4, 6);
        let b = pcrb_theta(&x, &mom, Complex64::new(1.0, 0.0), 1.0).unwrap();
        assert!(b.prior_only);
        assert!((b.value - sigma * sigma).abs() < 1e-8 * sigma * sigma);
        let ub = pcrb_upper_bound(&x, &mom, Complex64::new(1.0, 0.0), 1.0).unwrap();
        assert!((ub - b.value).abs() < 1e-15);
        let f = fim_signal(&x, &mom, Complex64::new(0.3, 0.4), 1.0).unwrap();
        assert_eq!(f.f_theta_theta, 0.0);
        assert_eq!(f.f_varsigma_varsigma, 0.0);
    }

    #[test]
    fn blocks_scale_quadratically() {
        let mom = gaussian_moments(PI / 45.0);
        let x = random_waveform(4, 6, 1);
        let x2 = Waveform(x.matrix() * Complex64::new(2f64.sqrt(), 0.0));
        let amp = Complex64::new(0.7, -0.2);
        let a = fim_signal(&x, &mom, amp, 0.5).unwrap();
        let b = fim_signal(&x2, &mom, amp, 0.5).unwrap();
        let close = |p: f64, q: f64| (2.0 * p - q).abs() <= 1e-12 * q.abs().max(1e-300);
        assert!(close(a.f_theta_theta, b.f_theta_theta));
        assert!(close(a.f_varsigma_varsigma, b.f_varsigma_varsigma));
        assert!(close(a.f_theta_varsigma[0], b.f_theta_varsigma[0]));
        assert!(close(a.f_theta_varsigma[1], b.f_theta_varsigma[1]));
        assert_eq!(a.b_theta_theta, b.b_theta_theta);
    }

    #[test]
    fn zero_prior_and_zero_waveform_errors() {
        let cfg = ArrayConfig::new(3, 3, 4, 1.0, 2.0);
        let d = TargetDistribution::point_mass(0.1).unwrap();
        let mom = compute_moments(&d, &cfg, &MomentOptions::default()).unwrap();
        let x = Waveform::zeros(3, 4);
        assert!(matches!(
            pcrb_theta(&x, &mom, Complex64::new(1.0, 0.0), 1.0),
            Err(Error::NoEnergyInSupport)
        ));
    }

    #[test]
    fn ratio_homogeneity() {
        let mom = gaussian_moments(PI / 180.0);
        let x = random_waveform(4, 6, 2);
        let a = pcrb_theta(&x, &mom, Complex64::new(0.6, 0.8), 1.0).unwrap().value;
        let s = 2f64.sqrt();
        let b = pcrb_theta(&x, &mom, Complex64::new(0.6 * s, 0.8 * s), 2.0)
            .unwrap()
            .value;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn shape_mismatch() {
        let mom = gaussian_moments(PI / 180.0);
        let x = random_waveform(3, 6, 2);
        assert!(matches!(
            pcrb_theta(&x, &mom, Complex64::new(1.0, 0.0), 1.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn non_hermitian_moments_rejected() {
        let mut mom = gaussian_moments(PI / 180.0);
        mom.xi3[(0, 1)] += Complex64::new(1.0, 0.0);
        let x = random_waveform(4, 6, 2);
        assert!(matches!(
            fim_signal(&x, &mom, Complex64::new(1.0, 0.0), 1.0),
            Err(Error::NotHermitian(_))
        ));
    }
}
