//! Executes every (method, κ) cell of a scenario and writes its tables.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use priorwave_core::bounds::{pcrb_theta, pcrb_upper_bound};
use priorwave_core::estimation::{amplitude_for_snr, MonteCarloOptions};
use priorwave_core::solvers::PsbpWeighting;
use priorwave_core::{
    baseline_crb, baseline_omni, compute_moments, monte_carlo_mse, solve_pcrb, solve_psbp_fair,
    solve_psbp_integrated, AngularGrid, ArrayConfig, DistributionMoments, SolveResult, TargetDistribution,
    Waveform,
};

use crate::config::{Method, ScenarioConfig};
use crate::emit;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paper_literal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub kappa: f64,
}

impl Cell {
    pub fn name(&self) -> String {
        if self.method.uses_kappa() {
            format!("{}_kappa{:.2}", self.method.as_str().replace('-', "_"), self.kappa)
        } else {
            self.method.as_str().to_string()
        }
    }
}

pub fn cells(cfg: &ScenarioConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &method in &cfg.run.methods {
        if method.uses_kappa() {
            out.extend(cfg.run.kappa_list.iter().map(|&kappa| Cell { method, kappa }));
        } else {
            out.push(Cell { method, kappa: 1.0 });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CellStatus {
    pub cell: String,
    pub method: Method,
    pub kappa: f64,
    pub seconds: f64,
    pub error: Option<String>,
    #[serde(skip)]
    summary: Option<CellSummary>,
}

#[derive(Debug, Clone)]
struct CellSummary {
    metric: &'static str,
    metric_value: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub scenario: Option<String>,
    pub seed: u64,
    pub paper_literal: bool,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
    pub cells: Vec<CellStatus>,
}

impl RunManifest {
    pub fn failures(&self) -> impl Iterator<Item = &CellStatus> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

struct Shared {
    dist: TargetDistribution,
    moments: DistributionMoments,
    grid: AngularGrid,
    seed: u64,
    paper_literal: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the scenario in the current rayon pool and writes all outputs.
/// Cell failures are recorded in the manifest rather than returned.
pub fn run_scenario(cfg: &ScenarioConfig, config_text: &str, opts: &RunOptions) -> Result<RunManifest> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let out_dir = opts.output_dir.clone().unwrap_or_else(|| cfg.run.output_dir.clone());
    std::fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;

    let dist = cfg.distribution().map_err(|(_, m)| anyhow!(m))?;
    let moment_opts = cfg.moment_options().map_err(|(_, m)| anyhow!(m))?;
    let base = cfg.array_config(1.0);
    let moments = compute_moments(&dist, &base, &moment_opts)?;
    let shared = Shared {
        dist,
        moments,
        grid: AngularGrid::new(cfg.run.grid_size)?,
        seed: opts.seed.unwrap_or(cfg.run.seed),
        paper_literal: opts.paper_literal,
    };

    let cells = cells(cfg);
    let statuses: Vec<CellStatus> = cells
        .par_iter()
        .map(|cell| {
            let name = cell.name();
            let dir = out_dir.join(&name);
            let clock = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(cfg, &shared, cell, &dir)))
                .unwrap_or_else(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into());
                    Err(anyhow!("solver panicked: {msg}"))
                });
            let (summary, error) = match outcome {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(format!("{e:#}"))),
            };
            CellStatus {
                cell: name,
                method: cell.method,
                kappa: cell.kappa,
                seconds: clock.elapsed().as_secs_f64(),
                error,
                summary,
            }
        })
        .collect();

    write_summary(&statuses, &out_dir.join(SUMMARY_FILE))?;

    let mut files = Vec::new();
    collect_files(&out_dir, &out_dir, &mut files)?;
    files.retain(|f| f.path != MANIFEST_FILE);
    files.sort_by(|a, b| a.path.cmp(&b.path));

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        scenario: cfg.name.clone(),
        seed: shared.seed,
        paper_literal: opts.paper_literal,
        threads: rayon::current_num_threads(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        files,
        cells: statuses,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(manifest)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if e.file_type()?.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root)?;
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push(FileEntry {
                path: rel,
                sha256: sha256_hex(&std::fs::read(&path)?),
            });
        }
    }
    Ok(())
}

fn write_summary(statuses: &[CellStatus], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(emit::SUMMARY_HEADER)?;
    for s in statuses {
        let (metric, value, iters, conv) = match &s.summary {
            Some(c) => (c.metric.to_string(), emit::exact(c.metric_value), c.iterations.to_string(), c.converged.to_string()),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        w.write_record([
            s.cell.clone(),
            s.method.to_string(),
            emit::exact(s.kappa),
            if s.error.is_some() { "failed" } else { "ok" }.to_string(),
            metric,
            value,
            iters,
            conv,
            s.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// SNRs used for the PCRB table; falls back to the unit-amplitude SNR.
fn pcrb_snrs(cfg: &ScenarioConfig, array: &ArrayConfig) -> Vec<f64> {
    if cfg.run.snr_list_db.is_empty() {
        vec![10.0 * (array.power / array.noise_power).log10()]
    } else {
        cfg.run.snr_list_db.clone()
    }
}

fn run_cell(cfg: &ScenarioConfig, shared: &Shared, cell: &Cell, dir: &Path) -> Result<CellSummary> {
    std::fs::create_dir_all(dir)?;
    let array = cfg.array_config(cell.kappa);
    let weighting = if shared.paper_literal {
        PsbpWeighting::BareSum
    } else {
        PsbpWeighting::CellWidth
    };
    let solved: Option<SolveResult> = match cell.method {
        Method::Pcrb => Some(solve_pcrb(&shared.moments, &array, &cfg.admm, shared.seed)?),
        Method::PsbpFair => Some(solve_psbp_fair(&shared.dist, &array, &shared.grid, &cfg.admm, shared.seed)?),
        Method::PsbpInt => Some(solve_psbp_integrated(
            &shared.dist,
            &array,
            &shared.grid,
            weighting,
            &cfg.admm,
            shared.seed,
        )?),
        Method::Crb => Some(baseline_crb(cfg.crb_theta0(&shared.dist), &array, &cfg.admm, shared.seed)?),
        Method::Omni => None,
    };
    let (waveform, summary, mut metrics): (Waveform, CellSummary, Vec<(String, f64)>) = match solved {
        Some(r) => {
            emit::write_trace(&r.trace, &dir.join("trace.csv"))?;
            let metric = match cell.method {
                Method::PsbpFair => "min_scaled_beampattern",
                Method::PsbpInt => "integrated_beampattern",
                _ => "trace_objective",
            };
            let mut m = vec![
                (metric.to_string(), r.metric_value),
                ("iterations".into(), r.trace.len() as f64),
                ("converged".into(), if r.trace.converged { 1.0 } else { 0.0 }),
                ("best_iter".into(), r.best_iter as f64),
            ];
            for (i, rho) in r.rho.iter().enumerate() {
                m.push((format!("rho_{}", i + 1), *rho));
            }
            let s = CellSummary {
                metric,
                metric_value: r.metric_value,
                iterations: r.trace.len(),
                converged: r.trace.converged,
            };
            (r.waveform, s, m)
        }
        None => {
            let x = baseline_omni(&array, shared.seed)?;
            let s = CellSummary {
                metric: "none",
                metric_value: 0.0,
                iterations: 0,
                converged: true,
            };
            (x, s, Vec::new())
        }
    };

    metrics.push(("power".into(), waveform.energy()));
    metrics.push(("papr".into(), waveform.papr()));
    metrics.push(("max_element_power".into(), waveform.max_element_power()));
    metrics.push(("element_bound".into(), array.element_bound()));

    emit::write_waveform(&waveform, &dir.join("waveform.csv"))?;
    emit::write_beampattern(&waveform, &shared.grid, array.spacing, &dir.join("beampattern.csv"))?;

    let mut pcrb_rows = Vec::new();
    for snr in pcrb_snrs(cfg, &array) {
        let amp = Complex64::new(amplitude_for_snr(snr, array.power, array.noise_power), 0.0);
        let p = pcrb_theta(&waveform, &shared.moments, amp, array.noise_power)?.value;
        let u = pcrb_upper_bound(&waveform, &shared.moments, amp, array.noise_power)?;
        pcrb_rows.push((snr, p, u));
    }
    emit::write_pcrb(&pcrb_rows, &dir.join("pcrb.csv"))?;
    if let Some(&(_, p, _)) = pcrb_rows.first() {
        metrics.push(("pcrb_first_snr".into(), p));
    }
    emit::write_metrics(&metrics, &dir.join("metrics.csv"))?;

    if cfg.run.n_trials > 0 {
        let mc = MonteCarloOptions {
            n_trials: cfg.run.n_trials,
            seed: shared.seed,
            refine: !shared.paper_literal,
        };
        let report = monte_carlo_mse(
            &waveform,
            &shared.dist,
            &shared.moments,
            &array,
            &shared.grid,
            &cfg.run.snr_list_db,
            &mc,
        )?;
        emit::write_mse(&report, &dir.join("mse.csv"), &dir.join("mse_bins.csv"))?;
    }
    Ok(summary)
}
