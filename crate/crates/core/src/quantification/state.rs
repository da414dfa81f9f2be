use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::graph::ReachGraph;
use super::replay::ReplayBuffer;
use super::weights::{Alpha, SamplingWeights};
use crate::error::{Error, Result};
use crate::geometry::{linf, BoxRegion, DeltaCover, StatePoint};
use crate::scenario::Trajectory;

/// What one trajectory did to the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Effect {
    /// Vertices discarded by an unsafe exit (0 when none).
    pub discarded: usize,
    pub discovered: usize,
    /// The start was no longer live, so the run was ignored.
    pub skipped: bool,
}

impl Effect {
    pub fn changed(&self) -> bool {
        self.discarded > 0 || self.discovered > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayStats {
    pub runs: usize,
    pub transitions: u64,
    pub events: usize,
}

/// Mutable state of a pruning/exploration run.
///
/// Live centres are the active ordinals of `cover`; `live` mirrors them in a
/// swap-remove list so uniform draws are O(1).
#[derive(Debug, Clone)]
pub struct QuantState {
    cover: DeltaCover,
    pruned: Vec<StatePoint>,
    /// ℓ∞ distance from each ordinal to the pruned set.
    dist: Vec<f64>,
    graph: ReachGraph,
    delta: f64,
    stability: u64,
    n_eps: u64,
    n_fresh: u64,
    n_replayed: u64,
    decays: u32,
    live: Vec<usize>,
    slot: Vec<usize>,
    alpha: Option<Alpha>,
    sampler: Option<WeightedIndex<f64>>,
}

const GONE: usize = usize::MAX;

impl QuantState {
    /// `δ₀` lattice over `domain`, nothing pruned.
    pub fn new(domain: &BoxRegion, delta0: f64, n_eps: u64, alpha: Option<Alpha>) -> Result<Self> {
        Self::from_cover(DeltaCover::build(domain, delta0)?, n_eps, alpha)
    }

    pub fn from_cover(cover: DeltaCover, n_eps: u64, alpha: Option<Alpha>) -> Result<Self> {
        if n_eps == 0 {
            return Err(crate::error::param("n_eps", "must be at least 1"));
        }
        let n = cover.len();
        let mut st = QuantState {
            delta: cover.radius(),
            graph: ReachGraph::with_vertices(n),
            dist: vec![f64::INFINITY; n],
            cover,
            pruned: Vec::new(),
            stability: 0,
            n_eps,
            n_fresh: 0,
            n_replayed: 0,
            decays: 0,
            live: Vec::new(),
            slot: Vec::new(),
            alpha,
            sampler: None,
        };
        st.slot = vec![GONE; n];
        for i in 0..n {
            if st.cover.is_active(i) {
                st.slot[i] = st.live.len();
                st.live.push(i);
            }
        }
        Ok(st)
    }

    pub fn cover(&self) -> &DeltaCover {
        &self.cover
    }

    pub fn into_cover(self) -> DeltaCover {
        self.cover
    }

    pub fn pruned(&self) -> &[StatePoint] {
        &self.pruned
    }

    pub fn graph(&self) -> &ReachGraph {
        &self.graph
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn stability(&self) -> u64 {
        self.stability
    }

    pub fn n_eps(&self) -> u64 {
        self.n_eps
    }

    pub fn is_stable(&self) -> bool {
        self.stability >= self.n_eps
    }

    pub fn n_fresh(&self) -> u64 {
        self.n_fresh
    }

    pub fn n_replayed(&self) -> u64 {
        self.n_replayed
    }

    pub fn decays(&self) -> u32 {
        self.decays
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn is_live(&self, i: usize) -> bool {
        self.slot.get(i).is_some_and(|s| *s != GONE)
    }

    pub fn distance_to_pruned(&self, i: usize) -> f64 {
        self.dist[i]
    }

    /// Current sampling distribution over live centres, in live-list order.
    pub fn weights(&self) -> SamplingWeights {
        let d: Vec<f64> = self.live.iter().map(|&i| self.dist[i]).collect();
        SamplingWeights::from_distances(&d, self.alpha.unwrap_or(Alpha::IDENTITY))
    }

    /// Draws a live ordinal, uniformly or prioritised toward the pruned set.
    pub fn sample_start<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if self.live.is_empty() {
            return Err(Error::EmptyCover);
        }
        if self.alpha.is_some() && !self.pruned.is_empty() {
            if self.sampler.is_none() {
                self.sampler = self.weights().sampler();
            }
            if let Some(s) = &self.sampler {
                return Ok(self.live[s.sample(rng)]);
            }
        }
        Ok(self.live[rng.random_range(0..self.live.len())])
    }

    fn drop_live(&mut self, i: usize) {
        let s = self.slot[i];
        if s == GONE {
            return;
        }
        self.live.swap_remove(s);
        if let Some(&moved) = self.live.get(s) {
            self.slot[moved] = s;
        }
        self.slot[i] = GONE;
        self.cover.deactivate(i);
        self.graph.isolate(i);
        self.sampler = None;
    }

    fn add_live(&mut self, i: usize) {
        self.slot.resize(self.cover.len(), GONE);
        self.dist.resize(self.cover.len(), f64::INFINITY);
        self.graph.ensure_vertices(self.cover.len());
        self.dist[i] = self.pruned.iter().map(|p| linf(p, self.cover.center(i))).fold(f64::INFINITY, f64::min);
        self.slot[i] = self.live.len();
        self.live.push(i);
        self.sampler = None;
    }

    /// Discards `v` with its ancestors and records `v`'s centre as pruned.
    pub fn prune(&mut self, v: usize) -> Result<usize> {
        let closure = self.graph.ancestors(v)?;
        let p = self.cover.center(v).to_vec();
        let mut n = 0;
        for u in closure {
            if self.is_live(u) {
                n += 1;
            }
            self.drop_live(u);
        }
        for &i in &self.live {
            let d = linf(&p, self.cover.center(i));
            if d < self.dist[i] {
                self.dist[i] = d;
            }
        }
        self.pruned.push(p);
        self.sampler = None;
        Ok(n)
    }

    /// Applies the prune and discovery rules to one run from live ordinal `start`.
    pub fn observe(&mut self, t: &Trajectory, start: usize) -> Result<Effect> {
        let mut eff = Effect::default();
        if !self.is_live(start) {
            eff.skipped = true;
            return Ok(eff);
        }
        let last = t.states.len().saturating_sub(1);
        for (j, s) in t.states.iter().enumerate().skip(1) {
            if j == last && t.is_unsafe() {
                eff.discarded = self.prune(start)?;
                break;
            }
            if !self.cover.contains(s) && self.dist[start] > self.delta {
                let id = self.cover.push(s.clone())?;
                self.add_live(id);
                self.graph.add_edge(start, id)?;
                eff.discovered += 1;
            }
        }
        Ok(eff)
    }

    /// Counts one fresh sample and updates the stability counter.
    pub fn count_fresh(&mut self, eff: Effect) {
        self.n_fresh += 1;
        self.bump(eff);
    }

    fn bump(&mut self, eff: Effect) {
        if eff.changed() {
            self.stability = 0;
        } else if !eff.skipped {
            self.stability += 1;
        }
    }

    /// `δ ← γδ`: refines the cover away from the pruned set and restarts the window.
    pub fn decay(&mut self, gamma: f64) -> Result<()> {
        let next = self.cover.refine(gamma, &self.pruned, gamma * self.delta)?;
        let old = self.cover.len();
        self.cover = next;
        self.delta = self.cover.radius();
        for i in old..self.cover.len() {
            self.add_live(i);
        }
        self.decays += 1;
        self.stability = 0;
        Ok(())
    }
}

/// Re-evaluates every stored run against the current cover and resolution.
///
/// Runs whose start is no longer live are skipped. Transitions are counted as
/// replayed; the fresh-sample counter is untouched.
pub fn replay_apply(buffer: &ReplayBuffer, state: &mut QuantState) -> Result<ReplayStats> {
    let mut stats = ReplayStats::default();
    buffer.for_each(|t| {
        let Some(start) = t.start_cell else { return Ok(()) };
        if !state.is_live(start) {
            return Ok(());
        }
        let eff = state.observe(t, start)?;
        stats.runs += 1;
        let steps = t.states.len().saturating_sub(1) as u64;
        stats.transitions += steps;
        state.n_replayed += steps;
        if eff.changed() {
            stats.events += 1;
            state.stability = 0;
        }
        Ok(())
    })?;
    Ok(stats)
}
