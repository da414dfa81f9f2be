//! Cell-by-cell comparison of two run directories.

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Serialize;

use setquant::geometry::{read_cover_csv, DeltaCover};
use setquant::oracle::{compare_sets, rasterize, CellSet};

use crate::config::to_box;
use crate::error::CliError;
use crate::run::{Report, CELLS, REPORT};

/// A finished run read back from disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub report: Report,
    pub cover: DeltaCover,
}

pub fn load_run(dir: &Path) -> Result<RunArtifacts, CliError> {
    let rp = dir.join(REPORT);
    let text = fs::read_to_string(&rp).map_err(|e| CliError::io(&rp, e))?;
    let report: Report = serde_json::from_str(&text).map_err(|e| CliError::Report { path: rp.clone(), source: e })?;
    let domain = to_box("domain", &report.domain)?;
    let cp = dir.join(CELLS);
    let raw = fs::read(&cp).map_err(|e| CliError::io(&cp, e))?;
    let body: Vec<u8> = raw
        .lines()
        .map_while(Result::ok)
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| format!("{l}\n").into_bytes())
        .collect();
    let cover = read_cover_csv(body.as_slice(), &domain)?;
    Ok(RunArtifacts { dir: dir.to_path_buf(), report, cover })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// Subject-vehicle policy when there is one, else the algorithm.
    pub label: String,
    pub dir: PathBuf,
    pub algorithm: String,
    pub seed: u64,
    pub config_digest: String,
    pub status: String,
    pub volume: f64,
    pub cell_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: RunSummary,
    pub b: RunSummary,
    /// `"a>b"`, `"a<b"` or `"a=b"` by reported volume.
    pub ordering: String,
    pub volume_delta: f64,
    pub resolution: f64,
    pub lattice_cells: usize,
    pub sym_diff_volume: f64,
    pub a_minus_b: f64,
    pub b_minus_a: f64,
    pub a_minus_b_cells: usize,
    pub b_minus_a_cells: usize,
    pub jaccard: f64,
    pub sym_diff_pct_of_a: Option<f64>,
    pub sym_diff_pct_of_b: Option<f64>,
    pub scope_digests_match: bool,
    pub forced: bool,
}

fn summary(r: &RunArtifacts) -> RunSummary {
    let label = match r.report.sv_policy {
        Some(p) => serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        None => r.report.algorithm.clone(),
    };
    RunSummary {
        label,
        dir: r.dir.clone(),
        algorithm: r.report.algorithm.clone(),
        seed: r.report.seed,
        config_digest: r.report.config_digest.clone(),
        status: r.report.status.clone(),
        volume: r.report.volume,
        cell_count: r.report.cell_count,
    }
}

fn pct(x: f64, of: f64) -> Option<f64> {
    (of > 0.0).then(|| 100.0 * x / of)
}

/// Rasterizes both runs onto their common lattice and compares them.
///
/// Runs must share a resolution. Mismatched scope digests are refused unless
/// `force` is set.
pub fn compare_runs(a: &RunArtifacts, b: &RunArtifacts, force: bool) -> Result<Comparison, CliError> {
    let matched = a.report.scope_digest == b.report.scope_digest;
    if !matched && !force {
        return Err(CliError::DigestMismatch { a: a.report.scope_digest.clone(), b: b.report.scope_digest.clone() });
    }
    if a.report.domain != b.report.domain {
        return Err(CliError::Resolution("runs cover different domains".into()));
    }
    let (ra, rb) = (a.cover.radius(), b.cover.radius());
    if (ra - rb).abs() > 1e-9 * ra.max(rb) {
        return Err(CliError::Resolution(format!("cell radius {ra} vs {rb}")));
    }
    let grid = DeltaCover::build(a.cover.domain(), ra)?;
    let ma = rasterize(&a.cover, &grid);
    let mb = rasterize(&b.cover, &grid);
    let c = compare_sets(CellSet { grid: &grid, mask: &ma }, CellSet { grid: &grid, mask: &mb })?;
    let (va, vb) = (a.report.volume, b.report.volume);
    let ordering = if va > vb {
        "a>b"
    } else if va < vb {
        "a<b"
    } else {
        "a=b"
    };
    Ok(Comparison {
        a: summary(a),
        b: summary(b),
        ordering: ordering.into(),
        volume_delta: va - vb,
        resolution: ra,
        lattice_cells: grid.len(),
        sym_diff_volume: c.sym_diff_volume,
        a_minus_b: c.a_minus_b,
        b_minus_a: c.b_minus_a,
        a_minus_b_cells: c.a_minus_b_cells,
        b_minus_a_cells: c.b_minus_a_cells,
        jaccard: c.jaccard,
        sym_diff_pct_of_a: pct(c.sym_diff_volume, c.a_volume),
        sym_diff_pct_of_b: pct(c.sym_diff_volume, c.b_volume),
        scope_digests_match: matched,
        forced: force && !matched,
    })
}

/// Plain-text table of the two runs.
pub fn summary_table(c: &Comparison) -> String {
    let mut s = format!("{:<12} {:<10} {:>8} {:>14} {:>8}\n", "label", "algorithm", "seed", "volume", "cells");
    for r in [&c.a, &c.b] {
        s.push_str(&format!("{:<12} {:<10} {:>8} {:>14.3} {:>8}\n", r.label, r.algorithm, r.seed, r.volume, r.cell_count));
    }
    s.push_str(&format!("ordering {}  sym-diff {:.3}  jaccard {:.4}\n", c.ordering, c.sym_diff_volume, c.jaccard));
    s
}
