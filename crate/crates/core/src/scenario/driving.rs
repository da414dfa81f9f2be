//! Longitudinal car-following benchmarks.
//!
//! Euler updates with start-of-step velocities. Speeds are clipped at zero and
//! disturbances add to every acceleration channel.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ActionSet, Dynamics, FacetClass, ScenarioSystem, SystemSpec};
use crate::error::{param, Error, Result};
use crate::geometry::{ActionPoint, BoxRegion, StatePoint};

pub const DEFAULT_DT: f64 = 0.1;
pub const BRAKE_RATE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub v_des: f64,
    pub headway: f64,
    pub s0: f64,
    pub a_max: f64,
    pub b: f64,
    pub a_min_clamp: f64,
    pub a_max_clamp: f64,
}

impl IdmParams {
    pub fn with_v_des(v_des: f64) -> Self {
        IdmParams { v_des, headway: 1.5, s0: 2.0, a_max: 0.73, b: 1.67, a_min_clamp: -4.67, a_max_clamp: 0.73 }
    }
}

/// IDM acceleration, clamped to `[a_min_clamp, a_max_clamp]`.
pub fn idm_accel(p: &IdmParams, v0: f64, v1: f64, p10: f64) -> Result<f64> {
    if !(p10 > 0.0) {
        return Err(param("p10", "IDM needs a positive gap"));
    }
    let s_star = p.s0 + v0 * p.headway + v0 * (v0 - v1) / (2.0 * (p.a_max * p.b).sqrt());
    let a = p.a_max * (1.0 - (v0 / p.v_des).powi(4) - (s_star / p10).powi(2));
    Ok(a.clamp(p.a_min_clamp, p.a_max_clamp))
}

/// Constant braking until standstill.
pub fn brake_to_stop_accel(v0: f64) -> f64 {
    if v0 > 0.0 {
        -BRAKE_RATE
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SvPolicy {
    BrakeToStop { rate: f64 },
    Idm(IdmParams),
}

impl SvPolicy {
    pub fn accel(&self, v0: f64, v1: f64, p10: f64) -> Result<f64> {
        match self {
            SvPolicy::BrakeToStop { rate } => Ok(if v0 > 0.0 { -rate } else { 0.0 }),
            SvPolicy::Idm(p) => idm_accel(p, v0, v1, p10),
        }
    }

    fn max_decel(&self) -> f64 {
        match self {
            SvPolicy::BrakeToStop { rate } => *rate,
            SvPolicy::Idm(p) => p.a_min_clamp.abs().max(p.a_max_clamp.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvKind {
    #[default]
    Brake,
    Idm,
}

/// Optional overrides for the driving benchmarks.
#[derive(Debug, Clone, Default)]
pub struct DrivingConfig {
    pub state_box: Option<BoxRegion>,
    pub action_box: Option<BoxRegion>,
    pub facets: Option<Vec<[FacetClass; 2]>>,
    pub sv: SvKind,
    pub omega_bar: f64,
    pub dt: Option<f64>,
}

/// Subject vehicle 0 following lead vehicle 1. State `(v0, v1, p10)`, action `u1`.
#[derive(Debug, Clone)]
pub struct LeadFollow {
    pub sv: SvPolicy,
    pub dt: f64,
}

impl Dynamics for LeadFollow {
    fn advance(&self, s: &[f64], u: &[f64], w: &[f64]) -> Result<StatePoint> {
        let (v0, v1, p10) = (s[0], s[1], s[2]);
        let a0 = self.sv.accel(v0, v1, p10)? + w.first().copied().unwrap_or(0.0);
        let a1 = u[0] + w.get(1).copied().unwrap_or(0.0);
        Ok(vec![(v0 + a0 * self.dt).max(0.0), (v1 + a1 * self.dt).max(0.0), p10 + (v1 - v0) * self.dt])
    }

    fn adversarial_actions(&self, actions: &ActionSet) -> Option<Vec<ActionPoint>> {
        match actions {
            ActionSet::Box(b) => Some(vec![vec![b.lower()[0]]]),
            ActionSet::Points(_) => None,
        }
    }
}

/// Subject vehicle 0 between lead 1 and rear follower 2.
/// State `(v0, v1, v2, p10, p20)`, action `(u1, u2)`.
#[derive(Debug, Clone)]
pub struct ThreeVehicle {
    pub sv: SvPolicy,
    pub dt: f64,
}

impl Dynamics for ThreeVehicle {
    fn advance(&self, s: &[f64], u: &[f64], w: &[f64]) -> Result<StatePoint> {
        let (v0, v1, v2, p10, p20) = (s[0], s[1], s[2], s[3], s[4]);
        let wi = |i: usize| w.get(i).copied().unwrap_or(0.0);
        let a0 = self.sv.accel(v0, v1, p10)? + wi(0);
        let a1 = u[0] + wi(1);
        let a2 = u[1] + wi(2);
        Ok(vec![
            (v0 + a0 * self.dt).max(0.0),
            (v1 + a1 * self.dt).max(0.0),
            (v2 + a2 * self.dt).max(0.0),
            p10 + (v1 - v0) * self.dt,
            p20 + (v2 - v0) * self.dt,
        ])
    }

    /// Hardest lead braking and the weakest rear braking.
    fn adversarial_actions(&self, actions: &ActionSet) -> Option<Vec<ActionPoint>> {
        match actions {
            ActionSet::Box(b) => Some(vec![vec![b.lower()[0], b.upper()[1]]]),
            ActionSet::Points(_) => None,
        }
    }
}

fn sv_policy(kind: SvKind, v_des: f64) -> SvPolicy {
    match kind {
        SvKind::Brake => SvPolicy::BrakeToStop { rate: BRAKE_RATE },
        SvKind::Idm => SvPolicy::Idm(IdmParams::with_v_des(v_des)),
    }
}

fn check_dim(what: &'static str, b: &BoxRegion, n: usize) -> Result<()> {
    if b.dim() != n {
        return Err(param(what, format!("expected {n} axes, got {}", b.dim())));
    }
    Ok(())
}

/// One-step bound for Euler car following: the larger of the fastest relative
/// drift and the hardest acceleration, plus the disturbance.
fn sigma_bar(speed_span: f64, max_accel: f64, omega_bar: f64, dt: f64) -> f64 {
    speed_span.max(max_accel + omega_bar) * dt + 1e-9
}

pub fn make_lead_follow(cfg: &DrivingConfig) -> Result<ScenarioSystem> {
    use FacetClass::{Truncate, Unsafe};
    let state_box = match &cfg.state_box {
        Some(b) => b.clone(),
        None => BoxRegion::from_bounds(&[(0.0, 16.0), (0.0, 16.0), (5.5, 60.0)])?,
    };
    check_dim("state_box", &state_box, 3)?;
    let action_box = match &cfg.action_box {
        Some(b) => b.clone(),
        None => BoxRegion::from_bounds(&[(-5.0, 3.0)])?,
    };
    check_dim("action_box", &action_box, 1)?;
    let facets = cfg.facets.clone().unwrap_or_else(|| vec![[Truncate, Truncate], [Truncate, Truncate], [Unsafe, Truncate]]);
    let dt = cfg.dt.unwrap_or(DEFAULT_DT);
    let sv = sv_policy(cfg.sv, state_box.upper()[0]);
    let vmax = state_box.upper()[0].max(state_box.upper()[1]) - state_box.lower()[0].min(state_box.lower()[1]).min(0.0);
    let amax = sv.max_decel().max(action_box.lower()[0].abs()).max(action_box.upper()[0].abs());
    if state_box.lower()[2] <= 0.0 && cfg.sv == SvKind::Idm {
        return Err(Error::InvalidBox("IDM needs a strictly positive gap range".into()));
    }
    ScenarioSystem::new(SystemSpec {
        name: "lead_follow".into(),
        axis_names: ["v0", "v1", "p10"].map(String::from).to_vec(),
        state_box,
        facets,
        actions: ActionSet::Box(action_box),
        disturbance_dim: 2,
        disturbance_bound: cfg.omega_bar,
        one_step_bound: sigma_bar(vmax, amax, cfg.omega_bar, dt),
        timestep: dt,
        sv_policy: Some(sv),
        transition: Arc::new(LeadFollow { sv, dt }),
    })
}

pub fn make_three_vehicle(cfg: &DrivingConfig) -> Result<ScenarioSystem> {
    use FacetClass::{Truncate, Unsafe};
    let state_box = match &cfg.state_box {
        Some(b) => b.clone(),
        None => BoxRegion::from_bounds(&[(0.0, 6.0), (0.0, 6.0), (0.0, 6.0), (5.0, 25.0), (-25.0, -5.0)])?,
    };
    check_dim("state_box", &state_box, 5)?;
    let action_box = match &cfg.action_box {
        Some(b) => b.clone(),
        None => BoxRegion::from_bounds(&[(-5.0, 3.0), (-7.0, -3.0)])?,
    };
    check_dim("action_box", &action_box, 2)?;
    let facets = cfg.facets.clone().unwrap_or_else(|| {
        vec![[Truncate, Truncate], [Truncate, Truncate], [Truncate, Truncate], [Unsafe, Truncate], [Truncate, Unsafe]]
    });
    let dt = cfg.dt.unwrap_or(DEFAULT_DT);
    let sv = sv_policy(cfg.sv, state_box.upper()[0]);
    let vmax = (0..3).map(|i| state_box.upper()[i]).fold(0.0, f64::max) - (0..3).map(|i| state_box.lower()[i]).fold(0.0, f64::min);
    let amax = (0..2)
        .flat_map(|i| [action_box.lower()[i].abs(), action_box.upper()[i].abs()])
        .fold(sv.max_decel(), f64::max);
    if state_box.lower()[3] <= 0.0 && cfg.sv == SvKind::Idm {
        return Err(Error::InvalidBox("IDM needs a strictly positive gap range".into()));
    }
    ScenarioSystem::new(SystemSpec {
        name: "three_vehicle".into(),
        axis_names: ["v0", "v1", "v2", "p10", "p20"].map(String::from).to_vec(),
        state_box,
        facets,
        actions: ActionSet::Box(action_box),
        disturbance_dim: 3,
        disturbance_bound: cfg.omega_bar,
        one_step_bound: sigma_bar(vmax, amax, cfg.omega_bar, dt),
        timestep: dt,
        sv_policy: Some(sv),
        transition: Arc::new(ThreeVehicle { sv, dt }),
    })
}
