use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::geometry::DeltaCover;
use crate::scenario::{ActionSet, Trajectory};

/// Shared hyper-parameters of the quantification algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub epsilon: f64,
    pub beta: f64,
    pub delta0: f64,
    pub gamma: f64,
    pub delta_min: f64,
    /// Trajectory horizon.
    pub k: usize,
    /// Fresh-sample (or attempt) budget.
    pub n: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { epsilon: 0.01, beta: 0.1, delta0: 4.0, gamma: 0.5, delta_min: 1.0, k: 40, n: 1_000_000 }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param("epsilon", "must lie in (0, 1)"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(param("beta", "must lie in (0, 1)"));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(param("delta0", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(param("gamma", "must lie in (0, 1)"));
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return Err(param("delta_min", "must be positive"));
        }
        if self.k < 2 {
            return Err(param("K", "trajectory horizon must be at least 2"));
        }
        if self.n == 0 {
            return Err(param("N", "budget must be at least 1"));
        }
        Ok(())
    }
}

/// Machine-readable outcome of a quantification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub seed: u64,
    pub hyper: Hyper,
    pub n_fresh_samples: u64,
    pub n_replayed: u64,
    pub n_decays: u32,
    pub final_delta: f64,
    pub cell_count: usize,
    pub volume: f64,
    pub cost: f64,
    /// Seconds; only filled when timing is requested, so reports stay reproducible.
    pub wall_time: Option<f64>,
    pub converged: bool,
    pub n_pruned: usize,
    pub restarts: u64,
    pub warnings: Vec<String>,
}

/// Result region plus report. `trajectories` is filled only on request.
#[derive(Debug, Clone)]
pub struct QuantOutcome {
    pub cover: DeltaCover,
    pub actions: ActionSet,
    pub report: RunReport,
    pub trajectories: Vec<Trajectory>,
}

/// `-|Φ × Γ|`: union volume of the live cells times the action-set measure.
pub fn cost(cover: &DeltaCover, actions: &ActionSet) -> f64 {
    let v = cover.volume() * actions.measure();
    if v == 0.0 {
        0.0
    } else {
        -v
    }
}
