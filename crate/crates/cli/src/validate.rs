//! Schema check for a run output directory.

use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::emit;
use crate::runner::{MANIFEST_FILE, SUMMARY_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Col {
    Int,
    Num,
    Text,
}

fn schema(file_name: &str) -> Option<(&'static [&'static str], &'static [Col])> {
    use Col::*;
    Some(match file_name {
        "waveform.csv" => (emit::WAVEFORM_HEADER, &[Int, Int, Num, Num]),
        "beampattern.csv" => (emit::BEAMPATTERN_HEADER, &[Num, Num, Num]),
        "trace.csv" => (emit::TRACE_HEADER, &[Int, Num, Num, Num]),
        "metrics.csv" => (emit::METRICS_HEADER, &[Text, Num]),
        "pcrb.csv" => (emit::PCRB_HEADER, &[Num, Num, Num]),
        "mse.csv" => (emit::MSE_HEADER, &[Num, Num, Num, Num, Int]),
        "mse_bins.csv" => (emit::MSE_BINS_HEADER, &[Num, Num, Int, Num]),
        SUMMARY_FILE => (emit::SUMMARY_HEADER, &[Text, Text, Num, Text, Text, Text, Text, Text, Text]),
        _ => return None,
    })
}

fn check_table(path: &Path, header: &[&str], cols: &[Col], problems: &mut Vec<String>) -> Result<()> {
    let mut rdr = csv::Reader::from_path(path)?;
    let got = rdr.headers()?.clone();
    if !got.iter().eq(header.iter().copied()) {
        problems.push(format!("{}: header {:?}, expected {:?}", path.display(), got, header));
        return Ok(());
    }
    let summary = path.file_name().is_some_and(|n| n == SUMMARY_FILE);
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{}:{line}: {e}", path.display()));
                continue;
            }
        };
        for (k, (value, col)) in rec.iter().zip(cols).enumerate() {
            let ok = match col {
                Col::Int => value.parse::<u64>().is_ok(),
                // failed summary rows leave the numeric columns empty
                Col::Num => value.parse::<f64>().is_ok() || (summary && value.is_empty()),
                Col::Text => true,
            };
            if !ok {
                problems.push(format!("{}:{line}: column {} has bad value {value:?}", path.display(), header[k]));
            }
        }
    }
    Ok(())
}

/// Returns a list of problems; empty means the directory is valid.
pub fn validate_dir(dir: &Path) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)
        .with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let manifest: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            problems.push(format!("{}: {e}", manifest_path.display()));
            return Ok(problems);
        }
    };
    for key in ["version", "config_sha256", "seed", "started_at", "finished_at", "files", "cells"] {
        if manifest.get(key).is_none() {
            problems.push(format!("{}: missing field {key}", manifest_path.display()));
        }
    }
    let files = manifest.get("files").and_then(|f| f.as_array()).cloned().unwrap_or_default();
    let mut listed = Vec::new();
    for f in &files {
        let (Some(rel), Some(hash)) = (f.get("path").and_then(|p| p.as_str()), f.get("sha256").and_then(|h| h.as_str())) else {
            problems.push(format!("{}: malformed file entry {f}", manifest_path.display()));
            continue;
        };
        listed.push(rel.to_string());
        let path = dir.join(rel);
        match std::fs::read(&path) {
            Ok(bytes) => {
                if hex::encode(Sha256::digest(&bytes)) != hash {
                    problems.push(format!("{}: checksum mismatch", path.display()));
                }
            }
            Err(e) => {
                problems.push(format!("{}: listed in manifest but unreadable: {e}", path.display()));
                continue;
            }
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        match schema(name) {
            Some((header, cols)) => check_table(&path, header, cols, &mut problems)?,
            None => problems.push(format!("{}: unknown table", path.display())),
        }
    }
    let mut present = Vec::new();
    list_files(dir, dir, &mut present)?;
    for p in present {
        if p != MANIFEST_FILE && !listed.contains(&p) {
            problems.push(format!("{}: not listed in manifest", dir.join(&p).display()));
        }
    }
    Ok(problems)
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        if e.file_type()?.is_dir() {
            list_files(root, &e.path(), out)?;
        } else {
            let rel = e.path().strip_prefix(root)?.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push(rel);
        }
    }
    Ok(())
}
