//! Waveform design drivers and baselines.

mod baselines;
mod fair;
mod quadratic;

pub use baselines::{baseline_crb, baseline_omni};
pub use fair::{eta_step, solve_psbp_fair, EtaStep};
pub use quadratic::{psbp_curvature, solve_pcrb, solve_psbp_integrated, solve_quadratic, PsbpWeighting};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::admm::AdmmTrace;
use crate::array::{ArrayConfig, CMatrix, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    /// `|‖X‖_F² − P| / P`.
    pub power_error: f64,
    pub max_element_power: f64,
    pub element_bound: f64,
    /// `bound − max |X(m,l)|²`; negative means violated.
    pub papr_margin: f64,
}

impl Feasibility {
    pub fn of(x: &Waveform, cfg: &ArrayConfig) -> Self {
        let bound = cfg.element_bound();
        let peak = x.max_element_power();
        Self {
            power_error: (x.energy() - cfg.power).abs() / cfg.power,
            max_element_power: peak,
            element_bound: bound,
            papr_margin: bound - peak,
        }
    }

    pub fn is_feasible(&self, power_tol: f64, papr_tol: f64) -> bool {
        self.power_error <= power_tol && self.max_element_power <= self.element_bound * (1.0 + papr_tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub waveform: Waveform,
    pub trace: AdmmTrace,
    /// Solver's native figure of merit at the returned waveform.
    pub metric_value: f64,
    pub feasibility: Feasibility,
    /// Penalties actually used.
    pub rho: Vec<f64>,
    /// Iteration at which the returned waveform was produced (0 = initial).
    pub best_iter: usize,
}

/// Random unit-modulus start scaled to meet the power budget exactly.
pub(crate) fn initial_waveform(cfg: &ArrayConfig, seed: u64) -> CMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let amp = (cfg.power / (cfg.m_t * cfg.l_samples) as f64).sqrt();
    CMatrix::from_fn(cfg.m_t, cfg.l_samples, |_, _| {
        Complex64::from_polar(amp, rng.random::<f64>() * TAU)
    })
}
