use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{product, ActionSet, Facet, ScenarioSystem};
use crate::error::Result;
use crate::geometry::ActionPoint;

/// Scenario action policy.
#[derive(Clone)]
pub enum Policy {
    /// i.i.d. uniform draws from the set.
    Uniform(ActionSet),
    /// A fixed state feedback.
    Deterministic(Arc<dyn Fn(&[f64]) -> ActionPoint + Send + Sync>),
    /// Per-state argmax of the adversarial objective over `candidates`.
    Adversarial { candidates: Vec<ActionPoint>, facets: Vec<Facet> },
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Uniform(a) => f.debug_tuple("Uniform").field(a).finish(),
            Policy::Deterministic(_) => f.write_str("Deterministic(..)"),
            Policy::Adversarial { candidates, facets } => {
                f.debug_struct("Adversarial").field("candidates", candidates).field("facets", facets).finish()
            }
        }
    }
}

impl Policy {
    pub fn constant(u: ActionPoint) -> Self {
        Policy::Uniform(ActionSet::Points(vec![u]))
    }

    /// Uniform over Γ* when the system has a closed form, else the per-state argmax
    /// over an 11-point-per-axis grid of Γ.
    pub fn adversarial_for(sys: &ScenarioSystem) -> Self {
        match sys.closed_form_adversarial() {
            Some(set) => Policy::Uniform(ActionSet::Points(set)),
            None => Policy::Adversarial { candidates: sys.actions().discretize(11), facets: sys.unsafe_facets() },
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            Policy::Uniform(a) => a.is_singleton(),
            Policy::Deterministic(_) | Policy::Adversarial { .. } => true,
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, sys: &ScenarioSystem, state: &[f64], rng: &mut R) -> Result<ActionPoint> {
        match self {
            Policy::Uniform(a) => Ok(a.sample(rng)),
            Policy::Deterministic(f) => Ok(f(state)),
            Policy::Adversarial { candidates, facets } => {
                let (best, _) = argmax_set(sys, state, candidates, facets)?;
                Ok(candidates[best[0]].clone())
            }
        }
    }
}

/// Signed excess of `p` beyond the given facets; the largest one wins.
fn facet_excess(sys: &ScenarioSystem, p: &[f64], facets: &[Facet]) -> f64 {
    let b = sys.state_box();
    facets
        .iter()
        .map(|f| if f.upper { p[f.axis] - b.upper()[f.axis] } else { b.lower()[f.axis] - p[f.axis] })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn disturbance_probes(sys: &ScenarioSystem) -> Vec<Vec<f64>> {
    let w = sys.disturbance_bound();
    if w == 0.0 {
        return vec![sys.zero_disturbance()];
    }
    let axes = vec![vec![-w, 0.0, w]; sys.disturbance_dim()];
    product(&axes)
}

fn argmax_set(sys: &ScenarioSystem, state: &[f64], candidates: &[ActionPoint], facets: &[Facet]) -> Result<(Vec<usize>, f64)> {
    let probes = disturbance_probes(sys);
    let all: Vec<Facet>;
    let facets = if facets.is_empty() {
        all = (0..sys.dim()).flat_map(|i| [Facet::lower(i), Facet::upper(i)]).collect();
        &all
    } else {
        facets
    };
    let mut best: Vec<usize> = Vec::new();
    let mut best_val = f64::NEG_INFINITY;
    for (i, u) in candidates.iter().enumerate() {
        let mut worst = f64::INFINITY;
        for w in &probes {
            let next = sys.advance_raw(state, u, w)?;
            worst = worst.min(facet_excess(sys, &next, facets));
        }
        if best.is_empty() || worst > best_val + 1e-12 {
            best_val = worst;
            best = vec![i];
        } else if (worst - best_val).abs() <= 1e-12 {
            best.push(i);
        }
    }
    Ok((best, best_val))
}

/// Γ* at `state` w.r.t. `facets` (the unsafe facets when empty, or every facet
/// if none is unsafe).
///
/// Built-in systems return their closed form. Otherwise the argmax over an
/// 11-point-per-axis grid of Γ of the infimum over disturbance probes of the
/// signed distance past the facets.
pub fn adversarial_action_set(sys: &ScenarioSystem, state: &[f64], facets: &[Facet]) -> Result<Vec<ActionPoint>> {
    if let Some(set) = sys.closed_form_adversarial() {
        return Ok(set);
    }
    let facets = if facets.is_empty() { sys.unsafe_facets() } else { facets.to_vec() };
    let candidates = sys.actions().discretize(11);
    let (idx, _) = argmax_set(sys, state, &candidates, &facets)?;
    Ok(idx.into_iter().map(|i| candidates[i].clone()).collect())
}
