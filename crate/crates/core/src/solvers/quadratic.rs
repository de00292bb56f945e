use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{initial_waveform, Feasibility, SolveResult};
use crate::admm::{papr_project, project_feasible, AdmmConfig, AdmmTrace, IterRecord, PowerConstrainedQuadratic};
use crate::array::{steering_unchecked, ArrayConfig, CMatrix, Waveform};
use crate::distribution::{DistributionMoments, TargetDistribution};
use crate::error::{dim_err, Result};
use crate::grid::{AngularGrid, SupportGrid, DEFAULT_PDF_FLOOR};

fn quad_value(x: &CMatrix, xi: &CMatrix) -> f64 {
    let m = xi * x;
    x.iter().zip(m.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Maximises `Tr{Xᴴ Ξ X}` under the power and per-element PAPR constraints.
pub fn solve_quadratic(xi: &CMatrix, cfg: &ArrayConfig, admm: &AdmmConfig, seed: u64) -> Result<SolveResult> {
    cfg.validate()?;
    admm.validate()?;
    if xi.nrows() != cfg.m_t || xi.ncols() != cfg.m_t {
        return Err(dim_err(
            format!("{0}x{0} curvature", cfg.m_t),
            format!("{}x{}", xi.nrows(), xi.ncols()),
        ));
    }
    let rho = admm.quadratic_rho(xi);
    let pmat = CMatrix::identity(cfg.m_t, cfg.m_t) * Complex64::new(rho, 0.0) - (xi + xi.adjoint());
    let step = PowerConstrainedQuadratic::new(&pmat, cfg.power, admm.mu_tol)?;
    let bound = cfg.element_bound();
    let tol = admm.primal_tol * cfg.power;
    let half_rho = 0.5 * rho;
    let c_rho = Complex64::new(rho, 0.0);

    let mut x = initial_waveform(cfg, seed);
    let mut u = x.clone();
    let mut d = CMatrix::zeros(cfg.m_t, cfg.l_samples);

    let mut best = x.clone();
    let mut best_val = quad_value(&x, xi);
    let mut best_iter = 0;
    let mut trace = AdmmTrace::default();

    for iter in 1..=admm.max_iters {
        let sol = step.solve(&((&u + &d) * c_rho))?;
        let x_new = sol.x;
        u = papr_project(&(&x_new - &d), bound);
        d += &u - &x_new;

        let gap = &u - &x_new;
        let residual = gap.norm_squared();
        let moved = (&x_new - &x).norm_squared();
        x = x_new;

        let value = quad_value(&x, xi);
        let al = -value + half_rho * (&gap + &d).norm_squared() - half_rho * d.norm_squared();
        trace.records.push(IterRecord {
            iter,
            objective: -value,
            augmented_lagrangian: al,
            residual,
            mu_iterations: sol.iterations,
        });

        let candidate = project_feasible(&x, cfg.power, bound);
        let cand_val = quad_value(&candidate, xi);
        if cand_val > best_val {
            best_val = cand_val;
            best = candidate;
            best_iter = iter;
        }
        if residual <= tol && moved <= tol {
            trace.converged = true;
            break;
        }
    }

    let waveform = Waveform(best);
    let feasibility = Feasibility::of(&waveform, cfg);
    Ok(SolveResult {
        waveform,
        trace,
        metric_value: best_val,
        feasibility,
        rho: vec![rho],
        best_iter,
    })
}

/// PCRB-oriented design: maximises `Tr{Xᴴ Ξ₀ X}`.
pub fn solve_pcrb(
    mom: &DistributionMoments,
    cfg: &ArrayConfig,
    admm: &AdmmConfig,
    seed: u64,
) -> Result<SolveResult> {
    if mom.m_t() != cfg.m_t {
        return Err(dim_err(
            format!("moments for {} elements", cfg.m_t),
            format!("{} elements", mom.m_t()),
        ));
    }
    solve_quadratic(&mom.xi0, cfg, admm, seed)
}

/// How grid points are weighted when summing the probability-scaled beampattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsbpWeighting {
    /// Multiply by the grid cell width, approximating the weighted integral.
    #[default]
    CellWidth,
    /// Plain sum over grid points.
    BareSum,
}

/// `Σ_p w f(θ_p) a(θ_p) a(θ_p)ᴴ` over the support grid.
pub fn psbp_curvature(support: &SupportGrid, cfg: &ArrayConfig, weighting: PsbpWeighting) -> CMatrix {
    let w = match weighting {
        PsbpWeighting::CellWidth => support.cell_width,
        PsbpWeighting::BareSum => 1.0,
    };
    let mut xi = CMatrix::zeros(cfg.m_t, cfg.m_t);
    for (&theta, &f) in support.angles.iter().zip(&support.densities) {
        let a = steering_unchecked(theta, cfg.m_t, cfg.spacing);
        xi += (&a * a.adjoint()) * Complex64::new(w * f, 0.0);
    }
    xi
}

/// Integrated probability-scaled beampattern design.
pub fn solve_psbp_integrated(
    dist: &TargetDistribution,
    cfg: &ArrayConfig,
    grid: &AngularGrid,
    weighting: PsbpWeighting,
    admm: &AdmmConfig,
    seed: u64,
) -> Result<SolveResult> {
    dist.validate()?;
    let support = SupportGrid::new(dist, grid, DEFAULT_PDF_FLOOR)?;
    let xi = psbp_curvature(&support, cfg, weighting);
    solve_quadratic(&xi, cfg, admm, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psbp_curvature_of_point_mass_is_rank_one() {
        let cfg = ArrayConfig::new(6, 6, 10, 1.0, 1.5);
        let grid = AngularGrid::new(361).unwrap();
        let d = TargetDistribution::point_mass(0.3).unwrap();
        let s = SupportGrid::new(&d, &grid, DEFAULT_PDF_FLOOR).unwrap();
        let xi = psbp_curvature(&s, &cfg, PsbpWeighting::CellWidth);
        let eig = nalgebra::linalg::SymmetricEigen::new(xi.clone());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        assert!((ev[0] - 6.0).abs() < 1e-10);
        assert!(ev[1].abs() < 1e-10);
    }

    #[test]
    fn returned_waveform_is_feasible() {
        let cfg = ArrayConfig::new(4, 4, 8, 1.0, 1.2);
        let grid = AngularGrid::new(181).unwrap();
        let d = TargetDistribution::uniform(vec![(-0.3, 0.1)], vec![1.0]).unwrap();
        let admm = AdmmConfig {
            max_iters: 300,
            ..Default::default()
        };
        let r = solve_psbp_integrated(&d, &cfg, &grid, PsbpWeighting::CellWidth, &admm, 3).unwrap();
        assert!(r.feasibility.is_feasible(1e-8, 1e-9));
    }
}
