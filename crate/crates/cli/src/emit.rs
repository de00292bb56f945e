//! Table writers. Every file is comma-separated with a fixed header.

use std::path::Path;

use anyhow::{Context, Result};
use num_complex::Complex64;
use priorwave_core::estimation::MseReport;
use priorwave_core::{beampattern, AdmmTrace, AngularGrid, CMatrix, Waveform};

pub const WAVEFORM_HEADER: &[&str] = &["row", "col", "re", "im"];
pub const BEAMPATTERN_HEADER: &[&str] = &["angle_deg", "power", "power_db"];
pub const TRACE_HEADER: &[&str] = &["iter", "objective", "augmented_lagrangian", "residual"];
pub const METRICS_HEADER: &[&str] = &["metric", "value"];
pub const PCRB_HEADER: &[&str] = &["snr_db", "pcrb", "pcrb_upper"];
pub const MSE_HEADER: &[&str] = &["snr_db", "mse", "std_error", "pcrb", "trials"];
pub const MSE_BINS_HEADER: &[&str] = &["snr_db", "angle_deg", "trials", "mse"];
pub const SUMMARY_HEADER: &[&str] = &[
    "cell", "method", "kappa", "status", "metric", "metric_value", "iterations", "converged", "error",
];

/// Nine significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        format!("{x}")
    }
}

/// Shortest representation that parses back to the same value.
pub fn exact(x: f64) -> String {
    format!("{x:e}")
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

pub fn write_waveform(x: &Waveform, path: &Path) -> Result<()> {
    let mut w = writer(path, WAVEFORM_HEADER)?;
    let m = x.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            w.write_record([r.to_string(), c.to_string(), exact(z.re), exact(z.im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_waveform(path: &Path) -> Result<Waveform> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    anyhow::ensure!(
        headers.iter().eq(WAVEFORM_HEADER.iter().copied()),
        "{}: expected header {}",
        path.display(),
        WAVEFORM_HEADER.join(",")
    );
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = || format!("{}: bad row {}", path.display(), i + 2);
        let r: usize = rec[0].parse().with_context(parse_err)?;
        let c: usize = rec[1].parse().with_context(parse_err)?;
        let re: f64 = rec[2].parse().with_context(parse_err)?;
        let im: f64 = rec[3].parse().with_context(parse_err)?;
        entries.push((r, c, Complex64::new(re, im)));
    }
    anyhow::ensure!(!entries.is_empty(), "{}: no waveform entries", path.display());
    let rows = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let cols = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    anyhow::ensure!(
        entries.len() == rows * cols,
        "{}: expected {} entries for a {rows}x{cols} matrix, found {}",
        path.display(),
        rows * cols,
        entries.len()
    );
    let mut m = CMatrix::zeros(rows, cols);
    for (r, c, z) in entries {
        m[(r, c)] = z;
    }
    Ok(Waveform(m))
}

pub fn write_beampattern(x: &Waveform, grid: &AngularGrid, spacing: f64, path: &Path) -> Result<()> {
    let mut w = writer(path, BEAMPATTERN_HEADER)?;
    for (&theta, deg) in grid.points().iter().zip(grid.degrees()) {
        let p = beampattern(x, theta, spacing)?;
        w.write_record([sig9(deg), sig9(p), sig9(10.0 * p.log10())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(trace: &AdmmTrace, path: &Path) -> Result<()> {
    let mut w = writer(path, TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            exact(r.objective),
            exact(r.augmented_lagrangian),
            exact(r.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics(rows: &[(String, f64)], path: &Path) -> Result<()> {
    let mut w = writer(path, METRICS_HEADER)?;
    for (k, v) in rows {
        w.write_record([k.clone(), exact(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pcrb(rows: &[(f64, f64, f64)], path: &Path) -> Result<()> {
    let mut w = writer(path, PCRB_HEADER)?;
    for (snr, p, u) in rows {
        w.write_record([exact(*snr), exact(*p), exact(*u)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mse(report: &MseReport, path: &Path, bins_path: &Path) -> Result<()> {
    let mut w = writer(path, MSE_HEADER)?;
    let mut b = writer(bins_path, MSE_BINS_HEADER)?;
    for r in &report.records {
        w.write_record([exact(r.snr_db), exact(r.mse), exact(r.std_error), exact(r.pcrb), r.trials.to_string()])?;
        for bin in &r.bins {
            b.write_record([exact(r.snr_db), sig9(bin.angle.to_degrees()), bin.trials.to_string(), exact(bin.mse)])?;
        }
    }
    w.flush()?;
    b.flush()?;
    Ok(())
}
