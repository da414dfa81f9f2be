use std::collections::{BTreeSet, HashMap};

use super::{axis_centers, linf, BoxRegion, Cell, StatePoint};
use crate::error::{param, Error, Result};

/// Slack used for boundary membership and containment checks.
pub(crate) const TOL: f64 = 1e-9;

/// Hash buckets of width `w` anchored at `origin`.
#[derive(Debug, Clone)]
pub(crate) struct Buckets {
    origin: Vec<f64>,
    width: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl Buckets {
    pub(crate) fn new(origin: Vec<f64>, width: f64) -> Self {
        Buckets { origin, width, map: HashMap::new() }
    }

    pub(crate) fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().zip(&self.origin).map(|(x, o)| ((x - o) / self.width).floor() as i64).collect()
    }

    pub(crate) fn insert(&mut self, p: &[f64], id: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(id);
    }

    pub(crate) fn remove(&mut self, p: &[f64], id: usize) {
        let k = self.key(p);
        if let Some(v) = self.map.get_mut(&k) {
            v.retain(|&j| j != id);
            if v.is_empty() {
                self.map.remove(&k);
            }
        }
    }

    /// Visits ids in buckets whose Chebyshev offset from `p`'s bucket is exactly `ring`.
    pub(crate) fn for_ring(&self, p: &[f64], ring: i64, mut f: impl FnMut(usize)) {
        let base = self.key(p);
        let n = base.len();
        let side = 2 * ring + 1;
        let total = (side as u64).pow(n as u32);
        let mut off = vec![0i64; n];
        for code in 0..total {
            let mut c = code;
            let mut on_shell = false;
            for o in off.iter_mut() {
                *o = (c % side as u64) as i64 - ring;
                c /= side as u64;
                if o.abs() == ring {
                    on_shell = true;
                }
            }
            if !on_shell {
                continue;
            }
            let key: Vec<i64> = base.iter().zip(&off).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.map.get(&key) {
                ids.iter().for_each(|&i| f(i));
            }
        }
    }

    pub(crate) fn ring_cost(n: usize, ring: i64) -> f64 {
        ((2 * ring + 1) as f64).powi(n as i32)
    }

    pub(crate) fn width(&self) -> f64 {
        self.width
    }
}

/// A δ-covering set: cell centres of common radius over a domain box.
///
/// Centres keep their ordinal for the lifetime of the cover; pruning only
/// clears the active flag.
#[derive(Debug, Clone)]
pub struct DeltaCover {
    centers: Vec<StatePoint>,
    active: Vec<bool>,
    radius: f64,
    domain: BoxRegion,
    index: Buckets,
    n_active: usize,
}

impl DeltaCover {
    /// Lattice cover of `domain` with pitch `2δ`, row-major with the last axis fastest.
    pub fn build(domain: &BoxRegion, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(param("delta", "must be positive"));
        }
        let axes: Vec<Vec<f64>> = (0..domain.dim())
            .map(|i| axis_centers(domain.lower()[i], domain.upper()[i], delta))
            .collect();
        let mut centers = Vec::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            centers.push(idx.iter().enumerate().map(|(i, &j)| axes[i][j]).collect());
            let mut d = axes.len();
            loop {
                if d == 0 {
                    return Self::from_centers(domain.clone(), delta, centers);
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    pub fn from_centers(domain: BoxRegion, radius: f64, centers: Vec<StatePoint>) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(param("radius", "must be positive"));
        }
        let mut cover = DeltaCover {
            index: Buckets::new(domain.lower().to_vec(), 2.0 * radius),
            centers: Vec::with_capacity(centers.len()),
            active: Vec::with_capacity(centers.len()),
            radius,
            domain,
            n_active: 0,
        };
        for c in centers {
            cover.push(c)?;
        }
        Ok(cover)
    }

    /// An empty cover of `domain`, to be grown with `push`.
    pub fn empty(domain: BoxRegion, radius: f64) -> Result<Self> {
        Self::from_centers(domain, radius, Vec::new())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn domain(&self) -> &BoxRegion {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of ordinals ever assigned, active or not.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_active == 0
    }

    pub fn active_count(&self) -> usize {
        self.n_active
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i]
    }

    pub fn centers(&self) -> &[StatePoint] {
        &self.centers
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.get(i).copied().unwrap_or(false)
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().enumerate().filter(|(_, a)| **a).map(|(i, _)| i)
    }

    pub fn active_centers(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.active_indices().map(move |i| self.centers[i].as_slice())
    }

    pub fn cell(&self, i: usize) -> Cell {
        Cell { center: self.centers[i].clone(), radius: self.radius }
    }

    /// Appends an active centre and returns its ordinal.
    pub fn push(&mut self, c: StatePoint) -> Result<usize> {
        self.domain.check_dim(&c)?;
        let inside = c
            .iter()
            .zip(self.domain.lower().iter().zip(self.domain.upper()))
            .all(|(x, (l, u))| *x >= l - TOL && *x <= u + TOL);
        if !inside {
            return Err(Error::Precondition(format!("centre {c:?} outside the cover domain")));
        }
        let id = self.centers.len();
        self.index.insert(&c, id);
        self.centers.push(c);
        self.active.push(true);
        self.n_active += 1;
        Ok(id)
    }

    /// Marks a centre as removed. Returns whether it was active.
    pub fn deactivate(&mut self, i: usize) -> bool {
        if !self.is_active(i) {
            return false;
        }
        self.active[i] = false;
        self.n_active -= 1;
        self.index.remove(&self.centers[i], i);
        true
    }

    /// Nearest active centre under ℓ∞; ties go to the lowest ordinal.
    pub fn nearest(&self, p: &[f64]) -> Result<(usize, f64)> {
        self.domain.check_dim(p)?;
        if self.n_active == 0 {
            return Err(Error::EmptyCover);
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let n = self.dim();
        let w = self.index.width();
        let mut ring = 0i64;
        loop {
            if Buckets::ring_cost(n, ring) > self.n_active as f64 {
                best = (usize::MAX, f64::INFINITY);
                for i in self.active_indices() {
                    let d = linf(&self.centers[i], p);
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                return Ok(best);
            }
            self.index.for_ring(p, ring, |i| {
                let d = linf(&self.centers[i], p);
                if d < best.1 || (d == best.1 && i < best.0) {
                    best = (i, d);
                }
            });
            if best.1 <= ring as f64 * w {
                return Ok(best);
            }
            ring += 1;
        }
    }

    /// Remark-5 distance: ℓ∞ distance to the nearest active centre.
    pub fn distance(&self, p: &[f64]) -> Result<f64> {
        self.nearest(p).map(|(_, d)| d)
    }

    /// Membership: some active centre lies within the radius of `p`.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || self.n_active == 0 {
            return false;
        }
        let lim = self.radius + TOL;
        let mut hit = false;
        self.index.for_ring(p, 0, |i| hit |= linf(&self.centers[i], p) <= lim);
        if !hit {
            self.index.for_ring(p, 1, |i| hit |= linf(&self.centers[i], p) <= lim);
        }
        hit
    }

    /// γ-refinement: keeps every old centre and adds the `γδ`-lattice centres whose cells
    /// overlap an active old cell, except those within `margin` of an excluded point.
    pub fn refine(&self, gamma: f64, excluded: &[StatePoint], margin: f64) -> Result<DeltaCover> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(param("gamma", "must lie in (0, 1)"));
        }
        let r2 = gamma * self.radius;
        let n = self.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| axis_centers(self.domain.lower()[i], self.domain.upper()[i], r2))
            .collect();
        let reach = self.radius + r2 - TOL;
        let mut picked: BTreeSet<Vec<usize>> = BTreeSet::new();
        for c in self.active_centers() {
            let ranges: Vec<(usize, usize)> = (0..n)
                .map(|i| {
                    let a = axes[i].partition_point(|x| *x <= c[i] - reach);
                    let b = axes[i].partition_point(|x| *x < c[i] + reach);
                    (a, b)
                })
                .collect();
            if ranges.iter().any(|(a, b)| a >= b) {
                continue;
            }
            let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                picked.insert(idx.clone());
                let mut d = n;
                loop {
                    if d == 0 {
                        break 'outer;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < ranges[d].1 {
                        break;
                    }
                    idx[d] = ranges[d].0;
                }
            }
        }

        let mut excl = Buckets::new(self.domain.lower().to_vec(), margin.max(r2));
        for (j, e) in excluded.iter().enumerate() {
            self.domain.check_dim(e)?;
            excl.insert(e, j);
        }
        let ring_limit = if margin > 0.0 { (margin / excl.width()).ceil() as i64 } else { 0 };

        let mut out = DeltaCover {
            index: Buckets::new(self.domain.lower().to_vec(), 2.0 * r2),
            centers: Vec::with_capacity(self.centers.len() + picked.len()),
            active: Vec::with_capacity(self.centers.len() + picked.len()),
            radius: r2,
            domain: self.domain.clone(),
            n_active: 0,
        };
        for (i, c) in self.centers.iter().enumerate() {
            let id = out.push(c.clone())?;
            if !self.active[i] {
                out.deactivate(id);
            }
        }
        for idx in picked {
            let c: StatePoint = idx.iter().enumerate().map(|(i, &j)| axes[i][j]).collect();
            let mut near = false;
            for ring in 0..=ring_limit {
                excl.for_ring(&c, ring, |j| near |= linf(&excluded[j], &c) <= margin);
                if near {
                    break;
                }
            }
            if near {
                continue;
            }
            let mut dup = false;
            out.index.for_ring(&c, 0, |j| dup |= out.centers[j] == c);
            if !dup {
                out.push(c)?;
            }
        }
        Ok(out)
    }

    /// Same centres and flags with a new shared radius.
    pub fn with_radius(&self, radius: f64) -> Result<DeltaCover> {
        let mut out = DeltaCover::from_centers(self.domain.clone(), radius, self.centers.clone())?;
        for i in 0..self.len() {
            if !self.active[i] {
                out.deactivate(i);
            }
        }
        Ok(out)
    }

    /// Union volume of the active cells clipped to the domain.
    pub fn volume(&self) -> f64 {
        super::union_volume(self.active_centers(), self.radius, &self.domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> BoxRegion {
        BoxRegion::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn build_examples() {
        let c = DeltaCover::build(&unit(1), 0.5).unwrap();
        assert_eq!(c.centers(), &[vec![0.5]]);
        assert_eq!(DeltaCover::build(&unit(2), 0.25).unwrap().len(), 4);
        let c = DeltaCover::build(&unit(1), 0.3).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.center(0)[0] - 0.3).abs() < 1e-12);
        assert!((c.center(1)[0] - 0.7).abs() < 1e-12);
        assert!(DeltaCover::build(&unit(1), 0.0).is_err());
        assert!(DeltaCover::build(&unit(1), -1.0).is_err());
    }

    #[test]
    fn build_order_is_row_major() {
        let c = DeltaCover::build(&unit(2), 0.25).unwrap();
        assert_eq!(c.center(0), &[0.25, 0.25]);
        assert_eq!(c.center(1), &[0.25, 0.75]);
        assert_eq!(c.center(2), &[0.75, 0.25]);
    }

    #[test]
    fn distance_examples() {
        let c = DeltaCover::build(&unit(1), 0.5).unwrap();
        assert_eq!(c.distance(&[0.5]).unwrap(), 0.0);
        assert!(c.contains(&[0.5]));
        assert!((c.distance(&[1.2]).unwrap() - 0.7).abs() < 1e-12);
        assert!(!c.contains(&[1.2]));

        let c = DeltaCover::from_centers(unit(1), 0.25, vec![vec![0.25], vec![0.75]]).unwrap();
        assert_eq!(c.nearest(&[0.5]).unwrap(), (0, 0.25));
        assert!(c.contains(&[0.5]));
    }

    #[test]
    fn empty_cover_is_an_error() {
        let mut c = DeltaCover::build(&unit(1), 0.5).unwrap();
        c.deactivate(0);
        assert!(matches!(c.distance(&[0.5]), Err(Error::EmptyCover)));
        assert!(!c.contains(&[0.5]));
    }

    #[test]
    fn nearest_far_query_falls_back() {
        let c = DeltaCover::from_centers(
            BoxRegion::new(vec![0.0; 3], vec![100.0; 3]).unwrap(),
            0.5,
            vec![vec![0.5; 3], vec![99.5; 3]],
        )
        .unwrap();
        let (i, d) = c.nearest(&[60.0, 60.0, 60.0]).unwrap();
        assert_eq!(i, 1);
        assert!((d - 39.5).abs() < 1e-12);
    }

    #[test]
    fn refine_examples() {
        let c = DeltaCover::build(&unit(1), 0.5).unwrap();
        let r = c.refine(0.5, &[], 0.0).unwrap();
        assert_eq!(r.centers(), &[vec![0.5], vec![0.25], vec![0.75]]);
        assert_eq!(r.radius(), 0.25);

        let r = c.refine(0.5, &[vec![0.2]], 0.25).unwrap();
        assert_eq!(r.centers(), &[vec![0.5], vec![0.75]]);

        let c2 = DeltaCover::build(&unit(2), 0.5).unwrap();
        let r2 = c2.refine(0.5, &[], 0.0).unwrap();
        assert_eq!(r2.len(), 5);
        assert_eq!(r2.active_count(), 5);

        assert!(c.refine(1.0, &[], 0.0).is_err());
        assert!(c.refine(0.0, &[], 0.0).is_err());
    }

    #[test]
    fn refine_keeps_inactive_ordinals() {
        let mut c = DeltaCover::build(&BoxRegion::from_bounds(&[(0.0, 4.0)]).unwrap(), 1.0).unwrap();
        c.deactivate(0);
        let r = c.refine(0.5, &[], 0.0).unwrap();
        assert!(!r.is_active(0));
        assert!(r.is_active(1));
        assert_eq!(r.center(1), &[3.0]);
        // only cells overlapping [2, 4] are added
        let added: Vec<f64> = r.active_centers().skip(1).map(|c| c[0]).collect();
        assert_eq!(added, vec![2.5, 3.5]);
    }
}
