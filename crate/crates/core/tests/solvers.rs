use num_complex::Complex64;
use priorwave_core::bounds::pcrb_theta;
use priorwave_core::grid::{SupportGrid, DEFAULT_PDF_FLOOR};
use priorwave_core::solvers::{psbp_curvature, solve_quadratic, PsbpWeighting};
use priorwave_core::*;
use std::f64::consts::PI;

fn case(half: f64) -> TargetDistribution {
    TargetDistribution::uniform(vec![(-half, half)], vec![1.0]).unwrap()
}

fn largest_eigenvalue(m: &CMatrix) -> f64 {
    nalgebra::linalg::SymmetricEigen::new(m.clone()).eigenvalues.max()
}

fn peak_angle(x: &Waveform, grid: &AngularGrid) -> f64 {
    grid.points()
        .iter()
        .map(|&t| (t, beampattern(x, t, 0.5).unwrap()))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0
}

#[test]
fn relaxed_papr_reaches_rayleigh_cap() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 200.0);
    let mom = compute_moments(&case(PI / 18.0), &cfg, &MomentOptions::default()).unwrap();
    let r = solve_pcrb(&mom, &cfg, &AdmmConfig::default(), 5).unwrap();
    let cap = 0.5 * cfg.power * largest_eigenvalue(&(&mom.xi0 + mom.xi0.adjoint()));
    assert!(r.metric_value >= 0.99 * cap);
    assert!(r.metric_value <= cap * (1.0 + 1e-12));
}

#[test]
fn tighter_papr_never_beats_cap() {
    for kappa in [1.0, 1.2, 1.5] {
        let cfg = ArrayConfig::new(6, 6, 12, 1.0, kappa);
        let mom = compute_moments(&case(PI / 9.0), &cfg, &MomentOptions::default()).unwrap();
        let r = solve_pcrb(&mom, &cfg, &AdmmConfig::default(), 1).unwrap();
        let cap = 0.5 * cfg.power * largest_eigenvalue(&(&mom.xi0 + mom.xi0.adjoint()));
        assert!(r.metric_value <= cap * (1.0 + 1e-12));
        assert!(r.feasibility.is_feasible(1e-8, 1e-9));
    }
}

#[test]
fn pcrb_solver_descends() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let mom = compute_moments(&case(PI / 18.0), &cfg, &MomentOptions::default()).unwrap();
    let r = solve_pcrb(&mom, &cfg, &AdmmConfig::default(), 2).unwrap();
    assert!(r.trace.converged);
    assert!(r.trace.descent_violations(1e-9).is_empty());
    assert!(r.trace.last().unwrap().residual <= 1e-8);
}

#[test]
fn integrated_and_quadratic_paths_agree() {
    let cfg = ArrayConfig::new(6, 6, 10, 1.0, 1.5);
    let grid = AngularGrid::new(181).unwrap();
    let d = TargetDistribution::uniform(vec![(-0.5, -0.2), (0.1, 0.3)], vec![0.5, 0.5]).unwrap();
    let admm = AdmmConfig::default();
    let a = solve_psbp_integrated(&d, &cfg, &grid, PsbpWeighting::CellWidth, &admm, 9).unwrap();
    let support = SupportGrid::new(&d, &grid, DEFAULT_PDF_FLOOR).unwrap();
    let xi = psbp_curvature(&support, &cfg, PsbpWeighting::CellWidth);
    let b = solve_quadratic(&xi, &cfg, &admm, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn integrated_objective_is_weighted_beampattern_sum() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let grid = AngularGrid::new(361).unwrap();
    let d = case(PI / 18.0);
    let r = solve_psbp_integrated(&d, &cfg, &grid, PsbpWeighting::CellWidth, &AdmmConfig::default(), 1).unwrap();
    let sum: f64 = grid
        .points()
        .iter()
        .filter(|&&t| d.pdf(t) > 0.0)
        .map(|&t| d.pdf(t) * beampattern(&r.waveform, t, 0.5).unwrap())
        .sum::<f64>()
        * grid.cell_width();
    assert!((sum - r.metric_value).abs() <= 1e-9 * sum.abs());
}

#[test]
fn point_mass_integrated_design_points_at_target() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.5);
    let grid = AngularGrid::new(361).unwrap();
    let theta0 = 0.35;
    let d = TargetDistribution::point_mass(theta0).unwrap();
    let r = solve_psbp_integrated(&d, &cfg, &grid, PsbpWeighting::CellWidth, &AdmmConfig::default(), 1).unwrap();
    assert!((peak_angle(&r.waveform, &grid) - theta0).abs() <= grid.cell_width());
}

#[test]
fn fair_reports_recomputed_min_ratio() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let grid = AngularGrid::new(361).unwrap();
    let d = case(PI / 36.0);
    let r = solve_psbp_fair(&d, &cfg, &grid, &AdmmConfig::default(), 1).unwrap();
    let eta = grid
        .points()
        .iter()
        .filter(|&&t| d.pdf(t) > 0.0)
        .map(|&t| beampattern(&r.waveform, t, 0.5).unwrap() / d.pdf(t))
        .fold(f64::INFINITY, f64::min);
    assert!((eta - r.metric_value).abs() <= 1e-6 * eta);
    assert!(r.feasibility.is_feasible(1e-8, 1e-9));

    let omni = baseline_omni(&cfg, 1).unwrap();
    let omni_eta = grid
        .points()
        .iter()
        .filter(|&&t| d.pdf(t) > 0.0)
        .map(|&t| beampattern(&omni, t, 0.5).unwrap() / d.pdf(t))
        .fold(f64::INFINITY, f64::min);
    assert!(eta > omni_eta);
}

#[test]
fn crb_baseline_focuses_and_beats_omni() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.2);
    let grid = AngularGrid::new(361).unwrap();
    let theta0 = -0.2;
    let r = baseline_crb(theta0, &cfg, &AdmmConfig::default(), 4).unwrap();
    assert!((peak_angle(&r.waveform, &grid) - theta0).abs() <= grid.cell_width());
    let mom = compute_moments(&TargetDistribution::point_mass(theta0).unwrap(), &cfg, &MomentOptions::default()).unwrap();
    let amp = Complex64::new(1.0, 0.0);
    let designed = pcrb_theta(&r.waveform, &mom, amp, 1.0).unwrap().value;
    let omni = pcrb_theta(&baseline_omni(&cfg, 4).unwrap(), &mom, amp, 1.0).unwrap().value;
    assert!(designed <= omni);
    let again = baseline_crb(theta0, &cfg, &AdmmConfig::default(), 4).unwrap();
    assert_eq!(r, again);
}

#[test]
fn omni_beampattern_is_flat() {
    let cfg = ArrayConfig::new(8, 8, 25, 1.0, 1.0);
    let x = baseline_omni(&cfg, 2).unwrap();
    let grid = AngularGrid::new(361).unwrap();
    let bp: Vec<f64> = grid.points().iter().map(|&t| beampattern(&x, t, 0.5).unwrap()).collect();
    let max = bp.iter().cloned().fold(f64::MIN, f64::max);
    let min = bp.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min <= 1.0 + 1e-9);
    assert!((min - cfg.power).abs() < 1e-9);
}
