//! Scenario dynamics, rollouts, policies and the built-in systems.

mod driving;
mod policy;
mod rollout;
mod toys;

pub use driving::{
    brake_to_stop_accel, idm_accel, make_lead_follow, make_three_vehicle, DrivingConfig, IdmParams, LeadFollow,
    SvKind, SvPolicy, ThreeVehicle,
};
pub use policy::{adversarial_action_set, Policy};
pub use rollout::{run_scenario, run_seeded, Exit, Trajectory};
pub use toys::{toy_flip, toy_identity, toy_shift, toy_shrink, toy_threshold, toy_two_basins};

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::geometry::{linf, ActionPoint, BoxRegion, StatePoint};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetClass {
    Unsafe,
    Truncate,
}

/// One face of the state box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Facet {
    pub axis: usize,
    pub upper: bool,
}

impl Facet {
    pub fn lower(axis: usize) -> Self {
        Facet { axis, upper: false }
    }

    pub fn upper(axis: usize) -> Self {
        Facet { axis, upper: true }
    }
}

/// Admissible actions: a box, or a finite point set (e.g. an adversarial set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionSet {
    Box(BoxRegion),
    Points(Vec<ActionPoint>),
}

impl ActionSet {
    pub fn dim(&self) -> usize {
        match self {
            ActionSet::Box(b) => b.dim(),
            ActionSet::Points(p) => p.first().map_or(0, Vec::len),
        }
    }

    /// Lebesgue measure for a box; finite sets count as one.
    pub fn measure(&self) -> f64 {
        match self {
            ActionSet::Box(b) => b.volume(),
            ActionSet::Points(_) => 1.0,
        }
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, ActionSet::Points(p) if p.len() == 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionPoint {
        match self {
            ActionSet::Box(b) => b.sample(rng),
            ActionSet::Points(p) if p.len() == 1 => p[0].clone(),
            ActionSet::Points(p) => p[rng.random_range(0..p.len())].clone(),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            ActionSet::Box(b) => {
                u.len() == b.dim()
                    && u.iter().zip(b.lower().iter().zip(b.upper())).all(|(x, (l, h))| *x >= l - TOL && *x <= h + TOL)
            }
            ActionSet::Points(p) => p.iter().any(|q| q.len() == u.len() && linf(q, u) <= TOL),
        }
    }

    /// `k` evenly spaced values per axis (product grid); point sets are returned as is.
    pub fn discretize(&self, k: usize) -> Vec<ActionPoint> {
        match self {
            ActionSet::Points(p) => p.clone(),
            ActionSet::Box(b) => {
                let k = k.max(2);
                let axes: Vec<Vec<f64>> = (0..b.dim())
                    .map(|i| (0..k).map(|j| b.lower()[i] + b.width(i) * j as f64 / (k - 1) as f64).collect())
                    .collect();
                product(&axes)
            }
        }
    }
}

pub fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for a in axes {
        out = out.iter().flat_map(|p| a.iter().map(move |x| [p.as_slice(), &[*x]].concat())).collect();
    }
    out
}

/// The update map `f(σ, u; ω)`, subject-vehicle policy included.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn advance(&self, state: &[f64], action: &[f64], disturbance: &[f64]) -> Result<StatePoint>;

    /// Closed-form adversarial actions, when known.
    fn adversarial_actions(&self, _actions: &ActionSet) -> Option<Vec<ActionPoint>> {
        None
    }
}

/// Everything needed to assemble a [`ScenarioSystem`].
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub name: String,
    pub axis_names: Vec<String>,
    pub state_box: BoxRegion,
    pub facets: Vec<[FacetClass; 2]>,
    pub actions: ActionSet,
    pub disturbance_dim: usize,
    pub disturbance_bound: f64,
    pub one_step_bound: f64,
    pub timestep: f64,
    pub sv_policy: Option<SvPolicy>,
    pub transition: Arc<dyn Dynamics>,
}

#[derive(Debug, Clone)]
pub struct ScenarioSystem {
    spec: SystemSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepClass {
    Inside,
    Truncated(Facet),
    Unsafe(Facet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: StatePoint,
    pub class: StepClass,
}

/// Probes used at construction to check the one-step bound.
const CONSTRUCTION_PROBES: usize = 2000;

impl ScenarioSystem {
    pub fn new(spec: SystemSpec) -> Result<Self> {
        let n = spec.state_box.dim();
        if spec.facets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: spec.facets.len() });
        }
        if spec.axis_names.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: spec.axis_names.len() });
        }
        if !(spec.disturbance_bound >= 0.0 && spec.disturbance_bound.is_finite()) {
            return Err(param("omega_bar", "must be finite and non-negative"));
        }
        if !(spec.one_step_bound > 0.0) {
            return Err(param("sigma_bar", "must be positive"));
        }
        if !(spec.timestep > 0.0) {
            return Err(param("dt", "must be positive"));
        }
        if let ActionSet::Points(p) = &spec.actions {
            if p.is_empty() || p.iter().any(|u| u.len() != p[0].len()) {
                return Err(param("actions", "finite action set must be non-empty and of one dimension"));
            }
        }
        let sys = ScenarioSystem { spec };
        let seen = sys.probe_one_step(CONSTRUCTION_PROBES, 0x5eed)?;
        if seen > sys.spec.one_step_bound + TOL {
            return Err(param(
                "sigma_bar",
                format!("observed one-step displacement {seen} exceeds the declared bound {}", sys.spec.one_step_bound),
            ));
        }
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn axis_names(&self) -> &[String] {
        &self.spec.axis_names
    }

    pub fn state_box(&self) -> &BoxRegion {
        &self.spec.state_box
    }

    pub fn dim(&self) -> usize {
        self.spec.state_box.dim()
    }

    pub fn facets(&self) -> &[[FacetClass; 2]] {
        &self.spec.facets
    }

    pub fn facet_class(&self, f: Facet) -> FacetClass {
        self.spec.facets[f.axis][usize::from(f.upper)]
    }

    pub fn unsafe_facets(&self) -> Vec<Facet> {
        (0..self.dim())
            .flat_map(|i| [Facet::lower(i), Facet::upper(i)])
            .filter(|f| self.facet_class(*f) == FacetClass::Unsafe)
            .collect()
    }

    pub fn facet_name(&self, f: Facet) -> String {
        format!("{}-{}", self.spec.axis_names[f.axis], if f.upper { "upper" } else { "lower" })
    }

    pub fn actions(&self) -> &ActionSet {
        &self.spec.actions
    }

    pub fn disturbance_dim(&self) -> usize {
        self.spec.disturbance_dim
    }

    pub fn disturbance_bound(&self) -> f64 {
        self.spec.disturbance_bound
    }

    pub fn one_step_bound(&self) -> f64 {
        self.spec.one_step_bound
    }

    pub fn timestep(&self) -> f64 {
        self.spec.timestep
    }

    pub fn sv_policy(&self) -> Option<SvPolicy> {
        self.spec.sv_policy
    }

    pub fn transition(&self) -> &Arc<dyn Dynamics> {
        &self.spec.transition
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Closed-form Γ* when the dynamics provide one.
    pub fn closed_form_adversarial(&self) -> Option<Vec<ActionPoint>> {
        self.spec.transition.adversarial_actions(&self.spec.actions)
    }

    pub fn zero_disturbance(&self) -> Vec<f64> {
        vec![0.0; self.spec.disturbance_dim]
    }

    pub fn sample_disturbance<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let w = self.spec.disturbance_bound;
        if w == 0.0 {
            return self.zero_disturbance();
        }
        (0..self.spec.disturbance_dim).map(|_| rng.random_range(-w..=w)).collect()
    }

    /// Raw transition without facet handling.
    pub fn advance_raw(&self, state: &[f64], u: &[f64], w: &[f64]) -> Result<StatePoint> {
        self.spec.transition.advance(state, u, w)
    }

    /// Classifies a raw successor: any unsafe crossing wins, else truncating facets clamp.
    pub fn classify(&self, mut raw: StatePoint) -> StepOutcome {
        let b = &self.spec.state_box;
        for i in 0..raw.len() {
            for (upper, crossed) in [(false, raw[i] < b.lower()[i]), (true, raw[i] > b.upper()[i])] {
                let f = Facet { axis: i, upper };
                if crossed && self.facet_class(f) == FacetClass::Unsafe {
                    return StepOutcome { next: raw, class: StepClass::Unsafe(f) };
                }
            }
        }
        let mut class = StepClass::Inside;
        for i in 0..raw.len() {
            let f = if raw[i] < b.lower()[i] {
                raw[i] = b.lower()[i];
                Facet::lower(i)
            } else if raw[i] > b.upper()[i] {
                raw[i] = b.upper()[i];
                Facet::upper(i)
            } else {
                continue;
            };
            if class == StepClass::Inside {
                class = StepClass::Truncated(f);
            }
        }
        StepOutcome { next: raw, class }
    }

    /// One step of the scenario dynamics with facet classification.
    pub fn step(&self, state: &[f64], u: &[f64], w: &[f64]) -> Result<StepOutcome> {
        let b = &self.spec.state_box;
        b.check_dim(state)?;
        let inside = state.iter().zip(b.lower().iter().zip(b.upper())).all(|(x, (l, h))| *x >= l - TOL && *x <= h + TOL);
        if !inside {
            return Err(Error::Precondition(format!("state {state:?} outside the state box")));
        }
        if !self.spec.actions.contains(u) {
            return Err(Error::Precondition(format!("action {u:?} outside the admissible set")));
        }
        if w.len() != self.spec.disturbance_dim {
            return Err(Error::DimensionMismatch { expected: self.spec.disturbance_dim, got: w.len() });
        }
        if w.iter().any(|x| x.abs() > self.spec.disturbance_bound + TOL) {
            return Err(Error::Precondition(format!("disturbance {w:?} exceeds the bound")));
        }
        Ok(self.classify(self.advance_raw(state, u, w)?))
    }

    /// Largest one-step ℓ∞ displacement seen over `samples` random probes.
    pub fn probe_one_step(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let s = self.spec.state_box.sample(&mut rng);
            let u = self.spec.actions.sample(&mut rng);
            let w = self.sample_disturbance(&mut rng);
            let next = self.advance_raw(&s, &u, &w)?;
            worst = worst.max(linf(&next, &s));
        }
        Ok(worst)
    }
}
