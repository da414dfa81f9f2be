//! Axis-aligned boxes, ℓ∞ distances and δ-covers.

mod cover;
mod csv;
mod volume;

pub use cover::DeltaCover;
pub use csv::{read_cover_csv, write_cover_csv, write_mask_csv};
pub use volume::union_volume;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StatePoint = Vec<f64>;
pub type ActionPoint = Vec<f64>;
pub type DisturbancePoint = Vec<f64>;

/// A compact axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("zero-dimensional box".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l >= u {
                return Err(Error::InvalidBox(format!("axis {i}: [{l}, {u}]")));
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    /// Builds a box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(bounds.iter().map(|b| b.0).collect(), bounds.iter().map(|b| b.1).collect())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn center(&self) -> StatePoint {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StatePoint {
        self.lower.iter().zip(&self.upper).map(|(l, u)| rng.random_range(*l..=*u)).collect()
    }

    pub fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        Ok(())
    }
}

/// ℓ∞ distance between two points of equal dimension.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Signed ℓ∞ distance: negative inside, positive outside, zero on the boundary.
pub fn signed_distance(p: &[f64], bx: &BoxRegion) -> Result<f64> {
    bx.check_dim(p)?;
    let mut outside = 0.0f64;
    let mut inside = f64::INFINITY;
    for ((x, l), u) in p.iter().zip(bx.lower()).zip(bx.upper()) {
        outside = outside.max(l - x).max(x - u);
        inside = inside.min(x - l).min(u - x);
    }
    Ok(if outside > 0.0 { outside } else { -inside })
}

/// The inner σ̄-layer of a box: `0 >= d_s(p) >= -sigma_bar`.
#[derive(Debug, Clone)]
pub struct BoundaryBand {
    pub region: BoxRegion,
    pub sigma_bar: f64,
}

impl BoundaryBand {
    pub fn contains(&self, p: &[f64]) -> bool {
        match signed_distance(p, &self.region) {
            Ok(d) => d <= 0.0 && d >= -self.sigma_bar,
            Err(_) => false,
        }
    }
}

pub fn boundary_band(region: &BoxRegion, sigma_bar: f64) -> Result<BoundaryBand> {
    if !(sigma_bar > 0.0) {
        return Err(crate::error::param("sigma_bar", "must be positive"));
    }
    Ok(BoundaryBand { region: region.clone(), sigma_bar })
}

/// The ℓ∞ ball of radius `radius` around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub center: StatePoint,
    pub radius: f64,
}

impl Cell {
    pub fn new(center: StatePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(crate::error::param("radius", "must be positive"));
        }
        Ok(Cell { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        linf(&self.center, p) <= self.radius
    }
}

/// Cell centres along one axis: pitch `2r`, first at `lo + r`, last clamped to `hi - r`.
pub(crate) fn axis_centers(lo: f64, hi: f64, r: f64) -> Vec<f64> {
    let width = hi - lo;
    if width <= 2.0 * r {
        return vec![0.5 * (lo + hi)];
    }
    let m = (width / (2.0 * r) - 1e-9).ceil() as usize;
    (0..m).map(|k| (lo + r + 2.0 * r * k as f64).min(hi - r)).collect()
}
