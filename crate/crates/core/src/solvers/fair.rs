use num_complex::Complex64;

use super::{initial_waveform, Feasibility, SolveResult};
use crate::admm::{papr_project, project_feasible, AdmmConfig, AdmmTrace, IterRecord, PowerConstrainedQuadratic};
use crate::array::{steering_unchecked, ArrayConfig, CMatrix, Waveform};
use crate::distribution::TargetDistribution;
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, SupportGrid, DEFAULT_PDF_FLOOR};

/// Default ρ₃ is this multiple of `1 / Σ_p f(θ_p)`; anything above 2 keeps
/// the η-step bounded.
pub const DEFAULT_AUX_SCALE: f64 = 200.0;
/// Default ρ₂ relative to `ρ₃ · λ_max(Σ_p a_p a_pᴴ)`.
pub const DEFAULT_RHO_SCALE: f64 = 0.03;

const ETA_BISECTION: usize = 200;

/// Result of the joint `(η, g)` minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaStep {
    pub eta: f64,
    /// Column `p` is `g_p`.
    pub g: CMatrix,
}

/// Minimises `−η + ρ₃/2 Σ_p ‖g_p − h_p‖²` subject to `‖g_p‖² ≥ f_p η`.
///
/// For fixed η the optimal `g_p` is `h_p` or `h_p` inflated radially onto the
/// sphere of radius `√(f_p η)`. The reduced function of η is convex with
/// derivative `−1 + ρ₃/2 Σ_{f_p η > ‖h_p‖²} √f_p (√f_p − ‖h_p‖/√η)`, whose root
/// is bracketed, bisected, then snapped to the closed form for the final
/// active set.
pub fn eta_step(h: &CMatrix, f: &[f64], rho3: f64) -> Result<EtaStep> {
    if h.ncols() != f.len() || f.is_empty() {
        return Err(Error::EmptyGrid(format!(
            "{} columns for {} densities",
            h.ncols(),
            f.len()
        )));
    }
    let total_f: f64 = f.iter().sum();
    if !(rho3 * total_f > 2.0) {
        return Err(Error::InvalidConfig(format!(
            "rho_aux must exceed 2 / sum(f) = {:e}",
            2.0 / total_f
        )));
    }
    let norms: Vec<f64> = h.column_iter().map(|c| c.norm()).collect();
    let slope = |eta: f64| -> f64 {
        let s = eta.sqrt();
        -1.0 + 0.5
            * rho3
            * norms
                .iter()
                .zip(f)
                .filter(|(n, fp)| *fp * eta > *n * *n)
                .map(|(n, fp)| fp.sqrt() * (fp.sqrt() - n / s))
                .sum::<f64>()
    };
    let mut hi = norms
        .iter()
        .zip(f)
        .map(|(n, fp)| n * n / fp)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Numerical("eta bracket did not close".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..ETA_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut eta = 0.5 * (lo + hi);
    // closed form on the active set found by bisection
    let active = |eta: f64| -> Vec<bool> { norms.iter().zip(f).map(|(n, fp)| fp * eta > n * n).collect() };
    let set = active(hi);
    let (sf, sh) = set
        .iter()
        .zip(norms.iter().zip(f))
        .filter(|(a, _)| **a)
        .fold((0.0, 0.0), |(sf, sh), (_, (n, fp))| (sf + fp, sh + fp.sqrt() * n));
    if rho3 * sf > 2.0 {
        let root = rho3 * sh / (rho3 * sf - 2.0);
        let exact = root * root;
        if exact > 0.0 && active(exact) == set {
            eta = exact;
        }
    }

    let mut g = h.clone();
    for (p, (mut col, (n, fp))) in g.column_iter_mut().zip(norms.iter().zip(f)).enumerate() {
        let radius = (fp * eta).sqrt();
        if n * n >= fp * eta {
            continue;
        }
        if *n > 0.0 {
            col *= Complex64::new(radius / n, 0.0);
        } else {
            let len = col.len();
            col.fill(Complex64::new(0.0, 0.0));
            col[p % len] = Complex64::new(radius, 0.0);
        }
    }
    Ok(EtaStep { eta, g })
}

/// `min_p ‖a_pᴴ X‖² / f_p`.
fn min_scaled_beampattern(x: &CMatrix, steer: &CMatrix, f: &[f64]) -> f64 {
    let h = x.adjoint() * steer;
    h.column_iter()
        .zip(f)
        .map(|(c, fp)| c.norm_squared() / fp)
        .fold(f64::INFINITY, f64::min)
}

/// Max-min probability-scaled beampattern design.
pub fn solve_psbp_fair(
    dist: &TargetDistribution,
    cfg: &ArrayConfig,
    grid: &AngularGrid,
    admm: &AdmmConfig,
    seed: u64,
) -> Result<SolveResult> {
    cfg.validate()?;
    admm.validate()?;
    dist.validate()?;
    let support = SupportGrid::new(dist, grid, DEFAULT_PDF_FLOOR)?;
    let f = &support.densities;
    let n_pts = support.len();
    let mut steer = CMatrix::zeros(cfg.m_t, n_pts);
    for (p, &theta) in support.angles.iter().enumerate() {
        steer.set_column(p, &steering_unchecked(theta, cfg.m_t, cfg.spacing));
    }
    let gram = &steer * steer.adjoint();
    let gram_max = nalgebra::linalg::SymmetricEigen::new(gram.clone()).eigenvalues.max();
    let total_f: f64 = f.iter().sum();
    let rho3 = admm.rho_aux.unwrap_or(DEFAULT_AUX_SCALE / total_f);
    let rho2 = admm.rho.unwrap_or(DEFAULT_RHO_SCALE * rho3 * gram_max);

    let pmat = CMatrix::identity(cfg.m_t, cfg.m_t) * Complex64::new(rho2, 0.0) + &gram * Complex64::new(rho3, 0.0);
    let step = PowerConstrainedQuadratic::new(&pmat, cfg.power, admm.mu_tol)?;
    let bound = cfg.element_bound();
    let tol = admm.primal_tol * cfg.power;
    let c2 = Complex64::new(rho2, 0.0);
    let c3 = Complex64::new(rho3, 0.0);

    let mut x = initial_waveform(cfg, seed);
    let mut t = x.clone();
    let mut d2 = CMatrix::zeros(cfg.m_t, cfg.l_samples);
    let mut g = x.adjoint() * &steer;
    let mut beta = CMatrix::zeros(cfg.l_samples, n_pts);

    let mut best = x.clone();
    let mut best_val = min_scaled_beampattern(&x, &steer, f);
    let mut best_iter = 0;
    let mut trace = AdmmTrace::default();

    for iter in 1..=admm.max_iters {
        let q = (&t + &d2) * c2 + &steer * (&g + &beta).adjoint() * c3;
        let sol = step.solve(&q)?;
        let x_new = sol.x;
        t = papr_project(&(&x_new - &d2), bound);
        let proj = x_new.adjoint() * &steer;
        let es = eta_step(&(&proj - &beta), f, rho3)?;
        g = es.g;
        let gap_t = &t - &x_new;
        let gap_g = &g - &proj;
        d2 += &gap_t;
        beta += &gap_g;

        let residual = gap_t.norm_squared() + gap_g.norm_squared();
        let moved = (&x_new - &x).norm_squared();
        x = x_new;

        let al = -es.eta + 0.5 * rho2 * ((&gap_t + &d2).norm_squared() - d2.norm_squared())
            + 0.5 * rho3 * ((&gap_g + &beta).norm_squared() - beta.norm_squared());
        trace.records.push(IterRecord {
            iter,
            objective: -min_scaled_beampattern(&x, &steer, f),
            augmented_lagrangian: al,
            residual,
            mu_iterations: sol.iterations,
        });

        let candidate = project_feasible(&x, cfg.power, bound);
        let cand_val = min_scaled_beampattern(&candidate, &steer, f);
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
        rho: vec![rho2, rho3],
        best_iter,
    })
}
