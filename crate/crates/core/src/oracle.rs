//! Brute-force fixed-point ground truth on a lattice.
//!
//! Each cell is represented by its centre. A cell is removed when some sampled
//! action/disturbance pair drives its centre out through an unsafe facet, off
//! the grid, or into a cell that has already been removed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{union_volume, ActionPoint, DeltaCover};
use crate::scenario::{product, ActionSet, ScenarioSystem, StepClass};

#[derive(Debug, Clone)]
pub struct OracleSet {
    pub grid: DeltaCover,
    pub mask: Vec<bool>,
    pub iterations: usize,
}

impl OracleSet {
    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn volume(&self) -> f64 {
        masked_volume(&self.grid, &self.mask)
    }
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Steps per successor, with the action and disturbance held fixed.
    pub horizon: usize,
    pub max_iter: usize,
    pub workers: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { horizon: 1, max_iter: 10_000, workers: 1 }
    }
}

/// Per axis `{lo, mid, hi}`, combined as a product. Finite sets pass through.
pub fn discretize_actions(set: &ActionSet) -> Vec<ActionPoint> {
    match set {
        ActionSet::Points(p) => p.clone(),
        ActionSet::Box(_) => set.discretize(3),
    }
}

/// The zero disturbance, plus every corner of the bound box when it is non-trivial.
pub fn disturbance_samples(sys: &ScenarioSystem) -> Vec<Vec<f64>> {
    let w = sys.disturbance_bound();
    if w == 0.0 || sys.disturbance_dim() == 0 {
        return vec![sys.zero_disturbance()];
    }
    let mut out = product(&vec![vec![-w, w]; sys.disturbance_dim()]);
    out.push(sys.zero_disturbance());
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Succ {
    Bad,
    To(usize),
}

fn successor(sys: &ScenarioSystem, grid: &DeltaCover, start: &[f64], u: &[f64], w: &[f64], horizon: usize) -> Result<Succ> {
    let mut s = start.to_vec();
    for _ in 0..horizon {
        let out = sys.step(&s, u, w)?;
        if let StepClass::Unsafe(_) = out.class {
            return Ok(Succ::Bad);
        }
        s = out.next;
    }
    let (j, d) = grid.nearest(&s)?;
    Ok(if d <= grid.radius() + 1e-9 { Succ::To(j) } else { Succ::Bad })
}

pub fn brute_force_invariant(
    sys: &ScenarioSystem,
    grid: &DeltaCover,
    actions: &[ActionPoint],
    disturbances: &[Vec<f64>],
    opts: &OracleOptions,
) -> Result<OracleSet> {
    if actions.is_empty() || disturbances.is_empty() {
        return Err(Error::Precondition("oracle needs at least one action and one disturbance sample".into()));
    }
    if grid.is_empty() {
        return Err(Error::EmptyCover);
    }
    let horizon = opts.horizon.max(1);
    let cell = |i: usize| -> Result<Vec<Succ>> {
        if !grid.is_active(i) {
            return Ok(vec![Succ::Bad]);
        }
        let mut out = Vec::with_capacity(actions.len() * disturbances.len());
        for u in actions {
            for w in disturbances {
                let s = successor(sys, grid, grid.center(i), u, w, horizon)?;
                if s == Succ::Bad {
                    return Ok(vec![Succ::Bad]);
                }
                out.push(s);
            }
        }
        out.sort_by_key(|s| match s {
            Succ::To(j) => *j,
            Succ::Bad => usize::MAX,
        });
        out.dedup();
        Ok(out)
    };
    let succ: Vec<Vec<Succ>> = if opts.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Precondition(e.to_string()))?;
        pool.install(|| (0..grid.len()).into_par_iter().map(cell).collect::<Result<Vec<_>>>())?
    } else {
        (0..grid.len()).map(cell).collect::<Result<Vec<_>>>()?
    };

    let mut mask: Vec<bool> = (0..grid.len()).map(|i| grid.is_active(i)).collect();
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iter {
            return Err(Error::NoFixedPoint(opts.max_iter));
        }
        iterations += 1;
        let removed: Vec<usize> = (0..grid.len())
            .filter(|&i| mask[i] && succ[i].iter().any(|s| matches!(s, Succ::Bad) || matches!(s, Succ::To(j) if !mask[*j])))
            .collect();
        if removed.is_empty() {
            break;
        }
        for i in removed {
            mask[i] = false;
        }
    }
    Ok(OracleSet { grid: grid.clone(), mask, iterations })
}

/// Lattice cells whose centre lies in `cover` (distance membership).
pub fn rasterize(cover: &DeltaCover, grid: &DeltaCover) -> Vec<bool> {
    grid.centers().iter().enumerate().map(|(i, c)| grid.is_active(i) && cover.contains(c)).collect()
}

pub fn masked_volume(grid: &DeltaCover, mask: &[bool]) -> f64 {
    let centers = grid.centers().iter().zip(mask).filter(|(_, m)| **m).map(|(c, _)| c.as_slice());
    union_volume(centers, grid.radius(), grid.domain())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetComparison {
    pub a_volume: f64,
    pub b_volume: f64,
    pub sym_diff_volume: f64,
    pub a_minus_b: f64,
    pub b_minus_a: f64,
    pub jaccard: f64,
    pub a_minus_b_cells: usize,
    pub b_minus_a_cells: usize,
}

/// A cell subset of a lattice.
#[derive(Debug, Clone, Copy)]
pub struct CellSet<'a> {
    pub grid: &'a DeltaCover,
    pub mask: &'a [bool],
}

fn same_lattice(a: &DeltaCover, b: &DeltaCover) -> bool {
    a.domain() == b.domain() && a.radius() == b.radius() && a.centers() == b.centers()
}

pub fn compare_sets(a: CellSet<'_>, b: CellSet<'_>) -> Result<SetComparison> {
    if !same_lattice(a.grid, b.grid) || a.mask.len() != a.grid.len() || b.mask.len() != b.grid.len() {
        return Err(Error::LatticeMismatch(format!(
            "radius {} vs {}, {} vs {} cells",
            a.grid.radius(),
            b.grid.radius(),
            a.grid.len(),
            b.grid.len()
        )));
    }
    let g = a.grid;
    let pick = |f: &dyn Fn(bool, bool) -> bool| -> Vec<bool> { a.mask.iter().zip(b.mask).map(|(x, y)| f(*x, *y)).collect() };
    let amb = pick(&|x, y| x && !y);
    let bma = pick(&|x, y| y && !x);
    let inter = pick(&|x, y| x && y);
    let uni = pick(&|x, y| x || y);
    let a_minus_b = masked_volume(g, &amb);
    let b_minus_a = masked_volume(g, &bma);
    let u = masked_volume(g, &uni);
    Ok(SetComparison {
        a_volume: masked_volume(g, a.mask),
        b_volume: masked_volume(g, b.mask),
        sym_diff_volume: a_minus_b + b_minus_a,
        a_minus_b,
        b_minus_a,
        jaccard: if u == 0.0 { 1.0 } else { masked_volume(g, &inter) / u },
        a_minus_b_cells: amb.iter().filter(|x| **x).count(),
        b_minus_a_cells: bma.iter().filter(|x| **x).count(),
    })
}
