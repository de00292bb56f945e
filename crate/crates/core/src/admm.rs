//! Building blocks shared by the ADMM waveform solvers.
//!
//! The primal X-step of every solver has the form
//! `min ½ Xᴴ P X − Re Tr{Qᴴ X}  s.t. ‖X‖_F² = P_tx`, whose solution is
//! `X(μ) = (P + 2μI)⁻¹ Q` with `μ` the unique root of the secular equation
//! `Σ_m Ψ_mm / (σ_m + 2μ)² = P_tx` on `μ > -σ_min / 2`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{CMatrix, Waveform};
use crate::error::{dim_err, Error, Result};

/// Entries whose squared magnitude exceeds the bound by no more than this
/// relative slack are left untouched, which makes the projection idempotent
/// under rounding.
const PROJECTION_SLACK: f64 = 1e-12;
const BISECTION_REL_TOL: f64 = 1e-10;
const MAX_BISECTION: usize = 200;
const MAX_NEWTON: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    /// Primary penalty (ρ₁ for the PCRB solver, ρ₄ for integrated PSBP,
    /// ρ₂ for fair PSBP). Ignored when `rho_auto` is set for the quadratic
    /// solvers.
    pub rho: Option<f64>,
    /// Secondary penalty of the fair PSBP solver (ρ₃).
    pub rho_aux: Option<f64>,
    /// Derive the penalty from the curvature: `safety·√3·‖Ξ + Ξᴴ‖_F`.
    pub rho_auto: bool,
    pub rho_safety: f64,
    pub max_iters: usize,
    /// Stop once `‖U − X‖²` and `‖Xᵗ⁺¹ − Xᵗ‖²` both fall below
    /// `primal_tol · P`.
    pub primal_tol: f64,
    /// Relative power accuracy `|‖X‖² − P| / P` of the multiplier search.
    pub mu_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: None,
            rho_aux: None,
            rho_auto: true,
            rho_safety: 1.1,
            max_iters: 5000,
            primal_tol: 1e-8,
            mu_tol: 1e-12,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [("rho", self.rho), ("rho_aux", self.rho_aux)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if !(self.rho_safety > 1.0) {
            return bad(format!("rho_safety must exceed 1, got {}", self.rho_safety));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.primal_tol > 0.0) || !(self.mu_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !self.rho_auto && self.rho.is_none() {
            return bad("rho must be given when rho_auto is off".into());
        }
        Ok(())
    }

    /// Penalty for a quadratic solver with curvature `xi`.
    pub fn quadratic_rho(&self, xi: &CMatrix) -> f64 {
        if self.rho_auto {
            auto_rho(xi, self.rho_safety)
        } else {
            self.rho.expect("validated")
        }
    }
}

/// `safety · √3 · ‖Ξ + Ξᴴ‖_F`, the sufficient-descent threshold scaled up.
pub fn auto_rho(xi: &CMatrix, safety: f64) -> f64 {
    let s = (xi + xi.adjoint()).norm();
    (safety * 3f64.sqrt() * s).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Solver objective in minimisation form at the current X.
    pub objective: f64,
    pub augmented_lagrangian: f64,
    /// `‖U − X‖_F²` (or the splitting residual of the solver).
    pub residual: f64,
    pub mu_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmmTrace {
    pub records: Vec<IterRecord>,
    pub converged: bool,
}

impl AdmmTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    /// Iterations at which the augmented Lagrangian rose by more than `slack`.
    pub fn descent_violations(&self, slack: f64) -> Vec<usize> {
        self.records
            .windows(2)
            .filter(|w| w[1].augmented_lagrangian > w[0].augmented_lagrangian + slack)
            .map(|w| w[1].iter)
            .collect()
    }
}

/// Power-constrained quadratic step with the eigendecomposition of the
/// curvature cached, so repeated solves cost `O(M² L)`.
#[derive(Debug, Clone)]
pub struct PowerConstrainedQuadratic {
    eigvecs: CMatrix,
    eigvals: DVector<f64>,
    sigma_min: f64,
    power: f64,
    mu_tol: f64,
}

#[derive(Debug, Clone)]
pub struct QuadSolution {
    pub x: CMatrix,
    pub mu: f64,
    pub iterations: usize,
}

impl PowerConstrainedQuadratic {
    pub fn new(curvature: &CMatrix, power: f64, mu_tol: f64) -> Result<Self> {
        if !curvature.is_square() {
            return Err(dim_err(
                "square curvature",
                format!("{}x{}", curvature.nrows(), curvature.ncols()),
            ));
        }
        let dev = (curvature - curvature.adjoint()).norm();
        if dev > 1e-10 * curvature.norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidConfig("power must be positive".into()));
        }
        let herm = (curvature + curvature.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let sigma_min = eig.eigenvalues.min();
        Ok(Self {
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues,
            sigma_min,
            power,
            mu_tol,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    /// Minimiser of `½ Xᴴ P X − Re Tr{Qᴴ X}` on the power sphere.
    pub fn solve(&self, q: &CMatrix) -> Result<QuadSolution> {
        let m = self.eigvecs.nrows();
        if q.nrows() != m {
            return Err(dim_err(format!("{m} rows"), format!("{} rows", q.nrows())));
        }
        let b = self.eigvecs.adjoint() * q;
        let psi: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
        let total: f64 = psi.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroTarget);
        }
        // shifted variable s = σ_min + 2μ > 0, gap_m = σ_m − σ_min ≥ 0
        let gaps: Vec<f64> = self.eigvals.iter().map(|s| s - self.sigma_min).collect();
        let power_at = |s: f64| -> f64 {
            psi.iter()
                .zip(&gaps)
                .map(|(p, g)| p / ((g + s) * (g + s)))
                .sum()
        };
        let p = self.power;
        let scale = self.eigvals.amax().max(total.sqrt()).max(1.0);
        let tiny = 1e-14 * scale;

        // hard case: the lowest eigenspace receives no target energy and the
        // remaining directions cannot absorb the full power
        let psi_low: f64 = psi
            .iter()
            .zip(&gaps)
            .filter(|(_, g)| **g <= tiny)
            .map(|(p, _)| p)
            .sum();
        if psi_low <= 1e-28 * total {
            let at_zero: f64 = psi
                .iter()
                .zip(&gaps)
                .filter(|(_, g)| **g > tiny)
                .map(|(p, g)| p / (g * g))
                .sum();
            if at_zero <= p {
                return Ok(self.hard_case(&b, &gaps, tiny, at_zero));
            }
        }

        let mut hi = (total / p).sqrt();
        let mut lo = (psi_low / p).sqrt().min(hi);
        let mut iterations = 0;
        while hi - lo > BISECTION_REL_TOL * hi && iterations < MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if power_at(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        // Newton on 1/√power(s) − 1/√P, which is close to linear in s
        let mut s = 0.5 * (lo + hi);
        for _ in 0..MAX_NEWTON {
            let pw = power_at(s);
            if (pw - p).abs() <= self.mu_tol * p {
                break;
            }
            let dpw: f64 = -2.0
                * psi
                    .iter()
                    .zip(&gaps)
                    .map(|(q, g)| q / (g + s).powi(3))
                    .sum::<f64>();
            let phi = 1.0 / pw.sqrt() - 1.0 / p.sqrt();
            let dphi = -0.5 * pw.powf(-1.5) * dpw;
            let next = s - phi / dphi;
            iterations += 1;
            if !(next > lo && next < hi) || !next.is_finite() {
                break;
            }
            s = next;
        }
        let inv: Vec<f64> = gaps.iter().map(|g| 1.0 / (g + s)).collect();
        let mut scaled = b;
        for (mut row, w) in scaled.row_iter_mut().zip(&inv) {
            row *= Complex64::new(*w, 0.0);
        }
        Ok(QuadSolution {
            x: &self.eigvecs * scaled,
            mu: 0.5 * (s - self.sigma_min),
            iterations,
        })
    }

    fn hard_case(&self, b: &CMatrix, gaps: &[f64], tiny: f64, at_zero: f64) -> QuadSolution {
        let mut coeffs = b.clone();
        let mut low_index = None;
        for (k, (mut row, g)) in coeffs.row_iter_mut().zip(gaps).enumerate() {
            if *g > tiny {
                row *= Complex64::new(1.0 / g, 0.0);
            } else {
                row.fill(Complex64::new(0.0, 0.0));
                low_index.get_or_insert(k);
            }
        }
        let fill = (self.power - at_zero).max(0.0).sqrt();
        if let Some(k) = low_index {
            coeffs[(k, 0)] = Complex64::new(fill, 0.0);
        }
        QuadSolution {
            x: &self.eigvecs * coeffs,
            mu: -0.5 * self.sigma_min,
            iterations: 0,
        }
    }
}

/// One-shot X-update `(P + 2μI)⁻¹ Q` with `‖X‖_F² = power`.
pub fn quad_x_update(q: &CMatrix, curvature: &CMatrix, power: f64, mu_tol: f64) -> Result<Waveform> {
    let solver = PowerConstrainedQuadratic::new(curvature, power, mu_tol)?;
    Ok(Waveform(solver.solve(q)?.x))
}

/// Euclidean projection of each entry onto the disc `|z|² ≤ bound`.
pub fn papr_project(w: &CMatrix, bound: f64) -> CMatrix {
    let cap = bound.sqrt();
    w.map(|z| {
        let mag2 = z.norm_sqr();
        if mag2 <= bound * (1.0 + PROJECTION_SLACK) {
            z
        } else {
            z * (cap / mag2.sqrt())
        }
    })
}

/// Scaled dual ascent `D + A − B`.
pub fn dual_update(dual: &CMatrix, primal_a: &CMatrix, primal_b: &CMatrix) -> Result<CMatrix> {
    if dual.shape() != primal_a.shape() || dual.shape() != primal_b.shape() {
        return Err(dim_err(
            format!("{:?}", dual.shape()),
            format!("{:?} / {:?}", primal_a.shape(), primal_b.shape()),
        ));
    }
    Ok(dual + primal_a - primal_b)
}

/// Nearest point to `z` with `‖X‖_F² = power` and `|X(m,l)|² ≤ bound`.
///
/// Phases of `z` are kept and magnitudes become `min(t|z|, √bound)` for the
/// scale `t` that meets the power budget. Requires `bound · len ≥ power`.
pub fn project_feasible(z: &CMatrix, power: f64, bound: f64) -> CMatrix {
    let n = z.len();
    let cap = bound.sqrt();
    let mut order: Vec<(usize, f64)> = z.iter().map(|c| c.norm()).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut rest: f64 = order.iter().map(|(_, r)| r * r).sum();
    let mut scale = None;
    for k in 0..=n {
        // the k largest entries sit on the cap
        let remaining = power - k as f64 * bound;
        if remaining <= 0.0 {
            break;
        }
        if rest > 0.0 {
            let t = (remaining / rest).sqrt();
            let next_ok = k == n || t * order[k].1 <= cap * (1.0 + PROJECTION_SLACK);
            let prev_ok = k == 0 || t * order[k - 1].1 >= cap * (1.0 - PROJECTION_SLACK);
            if next_ok && prev_ok {
                scale = Some((k, t));
                break;
            }
        }
        if k < n {
            rest -= order[k].1 * order[k].1;
            rest = rest.max(0.0);
        }
    }
    let mut out = z.clone();
    match scale {
        Some((k, t)) => {
            for (rank, &(idx, r)) in order.iter().enumerate() {
                let mag = if rank < k { cap } else { (t * r).min(cap) };
                out[idx] = if r > 0.0 {
                    z[idx] * (mag / r)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
        None => {
            // nonzero entries all capped and still short: spread the rest
            // evenly over the zero entries
            let zeros: Vec<usize> = order.iter().filter(|(_, r)| *r == 0.0).map(|(i, _)| *i).collect();
            let capped = (n - zeros.len()) as f64 * bound;
            let fill = if zeros.is_empty() {
                0.0
            } else {
                ((power - capped).max(0.0) / zeros.len() as f64).sqrt().min(cap)
            };
            for &(idx, r) in &order {
                out[idx] = if r > 0.0 {
                    z[idx] * (cap / r)
                } else {
                    Complex64::new(fill, 0.0)
                };
            }
        }
    }
    out
}
