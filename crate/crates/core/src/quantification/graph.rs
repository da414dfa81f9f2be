use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::error::{Error, Result};

/// Directed graph of observed transitions between cover centres.
#[derive(Debug, Clone, Default)]
pub struct ReachGraph {
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    edges: HashSet<(usize, usize)>,
}

impl ReachGraph {
    pub fn with_vertices(n: usize) -> Self {
        let mut g = ReachGraph::default();
        g.ensure_vertices(n);
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Grows the vertex range to `0..n`.
    pub fn ensure_vertices(&mut self, n: usize) {
        if n > self.out.len() {
            self.out.resize_with(n, Vec::new);
            self.inc.resize_with(n, Vec::new);
        }
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Adds `from -> to`; returns false for a duplicate.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<bool> {
        for v in [from, to] {
            if v >= self.out.len() {
                return Err(Error::UnknownVertex(v));
            }
        }
        if !self.edges.insert((from, to)) {
            return Ok(false);
        }
        self.out[from].push(to);
        self.inc[to].push(from);
        Ok(true)
    }

    /// Drops every edge touching `v`.
    pub fn isolate(&mut self, v: usize) {
        if v >= self.out.len() {
            return;
        }
        for w in std::mem::take(&mut self.out[v]) {
            self.inc[w].retain(|&x| x != v);
            self.edges.remove(&(v, w));
        }
        for w in std::mem::take(&mut self.inc[v]) {
            self.out[w].retain(|&x| x != v);
            self.edges.remove(&(w, v));
        }
    }

    /// `v` together with every vertex that has a directed path to `v`.
    pub fn ancestors(&self, v: usize) -> Result<BTreeSet<usize>> {
        if v >= self.out.len() {
            return Err(Error::UnknownVertex(v));
        }
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            for &p in &self.inc[x] {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        Ok(seen)
    }
}

/// Vertices that can reach `v`, `v` included.
pub fn reachable_closure(g: &ReachGraph, v: usize) -> Result<BTreeSet<usize>> {
    g.ancestors(v)
}
