use std::io::{BufRead, Write};

use super::{BoxRegion, DeltaCover};
use crate::error::{Error, Result};

/// Fixed-point decimal with nine significant digits.
pub(crate) fn fmt9(v: f64) -> String {
    let mag = if v == 0.0 { 0 } else { v.abs().log10().floor() as i32 + 1 };
    let decimals = (9 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn header<W: Write>(w: &mut W, cover: &DeltaCover) -> Result<()> {
    writeln!(w, "dim,delta")?;
    writeln!(w, "{},{}", cover.dim(), fmt9(cover.radius()))?;
    Ok(())
}

fn row(c: &[f64]) -> String {
    c.iter().map(|x| fmt9(*x)).collect::<Vec<_>>().join(",")
}

/// Writes the active centres of `cover`.
pub fn write_cover_csv<W: Write>(w: &mut W, cover: &DeltaCover) -> Result<()> {
    header(w, cover)?;
    for c in cover.active_centers() {
        writeln!(w, "{}", row(c))?;
    }
    Ok(())
}

/// Writes every centre of `grid` followed by a 1/0 membership column.
pub fn write_mask_csv<W: Write>(w: &mut W, grid: &DeltaCover, mask: &[bool]) -> Result<()> {
    header(w, grid)?;
    for (i, c) in grid.centers().iter().enumerate() {
        writeln!(w, "{},{}", row(c), u8::from(mask.get(i).copied().unwrap_or(false)))?;
    }
    Ok(())
}

/// Reads a cover written by [`write_cover_csv`] back over `domain`.
pub fn read_cover_csv<R: BufRead>(r: R, domain: &BoxRegion) -> Result<DeltaCover> {
    let bad = |line: usize, reason: &str| Error::CoverCsv { line, reason: reason.to_string() };
    let mut lines = r.lines();
    let head = lines.next().ok_or_else(|| bad(1, "missing header"))??;
    if head.trim() != "dim,delta" {
        return Err(bad(1, "expected `dim,delta`"));
    }
    let vals = lines.next().ok_or_else(|| bad(2, "missing dim/delta values"))??;
    let mut it = vals.split(',');
    let dim: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad(2, "bad dim"))?;
    let delta: f64 = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad(2, "bad delta"))?;
    if dim != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: dim });
    }
    let mut centers = Vec::new();
    for (k, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let c: Vec<f64> = l
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(k + 3, "non-numeric coordinate"))?;
        if c.len() != dim {
            return Err(bad(k + 3, "wrong number of coordinates"));
        }
        centers.push(c);
    }
    DeltaCover::from_centers(domain.clone(), delta, centers)
}
