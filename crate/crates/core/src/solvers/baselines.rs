use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::TAU;

use super::{solve_pcrb, SolveResult};
use crate::admm::AdmmConfig;
use crate::array::{check_angle, ArrayConfig, CMatrix, Waveform};
use crate::distribution::{compute_moments, MomentOptions, TargetDistribution};
use crate::error::{Error, Result};

/// Orthogonal constant-modulus waveform: distinct rows of an `L`-point DFT,
/// each with a random phase offset, scaled so that `XXᴴ = (P/M_t) I`.
pub fn baseline_omni(cfg: &ArrayConfig, seed: u64) -> Result<Waveform> {
    cfg.validate()?;
    if cfg.l_samples < cfg.m_t {
        return Err(Error::InvalidConfig(format!(
            "omnidirectional waveform needs L >= M_t ({} < {})",
            cfg.l_samples, cfg.m_t
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut freqs: Vec<usize> = (0..cfg.l_samples).collect();
    freqs.shuffle(&mut rng);
    let offsets: Vec<f64> = (0..cfg.m_t).map(|_| rng.random::<f64>() * TAU).collect();
    let amp = (cfg.power / (cfg.m_t * cfg.l_samples) as f64).sqrt();
    let l = cfg.l_samples;
    Ok(Waveform(CMatrix::from_fn(cfg.m_t, l, |m, n| {
        let phase = TAU * ((freqs[m] * n) % l) as f64 / l as f64 + offsets[m];
        Complex64::from_polar(amp, phase)
    })))
}

/// Design for a known angle: the PCRB solver driven by a point-mass prior.
pub fn baseline_crb(theta0: f64, cfg: &ArrayConfig, admm: &AdmmConfig, seed: u64) -> Result<SolveResult> {
    check_angle(theta0)?;
    let dist = TargetDistribution::point_mass(theta0)?;
    let mom = compute_moments(&dist, cfg, &MomentOptions::default())?;
    solve_pcrb(&mom, cfg, admm, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omni_rows_are_orthogonal() {
        let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
        let x = baseline_omni(&cfg, 7).unwrap();
        let r = x.covariance();
        let want = CMatrix::identity(8, 8) * Complex64::new(1.0 / 8.0, 0.0);
        assert!((r - want).norm() < 1e-12);
        assert!((x.papr() - 1.0).abs() < 1e-12);
        assert!((x.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omni_needs_enough_samples() {
        let cfg = ArrayConfig::new(8, 8, 4, 1.0, 1.2);
        assert!(baseline_omni(&cfg, 1).is_err());
    }
}
