//! One-dimensional systems with known invariant sets.

use std::sync::Arc;

use super::{ActionSet, Dynamics, FacetClass, ScenarioSystem, SystemSpec};
use crate::error::Result;
use crate::geometry::{BoxRegion, StatePoint};

use FacetClass::{Truncate, Unsafe};

#[derive(Debug)]
struct Map1(fn(f64, f64) -> f64);

impl Dynamics for Map1 {
    fn advance(&self, s: &[f64], u: &[f64], _w: &[f64]) -> Result<StatePoint> {
        Ok(s.iter().map(|x| (self.0)(*x, u.first().copied().unwrap_or(0.0))).collect())
    }
}

fn toy(name: &str, state_box: BoxRegion, facets: [FacetClass; 2], actions: ActionSet, sigma_bar: f64, f: fn(f64, f64) -> f64) -> ScenarioSystem {
    let n = state_box.dim();
    ScenarioSystem::new(SystemSpec {
        name: name.to_string(),
        axis_names: (0..n).map(|i| format!("x{i}")).collect(),
        state_box,
        facets: vec![facets; n],
        actions,
        disturbance_dim: 0,
        disturbance_bound: 0.0,
        one_step_bound: sigma_bar,
        timestep: 1.0,
        sv_policy: None,
        transition: Arc::new(Map1(f)),
    })
    .expect("toy systems are well formed")
}

fn no_action() -> ActionSet {
    ActionSet::Points(vec![vec![0.0]])
}

fn interval(lo: f64, hi: f64) -> BoxRegion {
    BoxRegion::from_bounds(&[(lo, hi)]).expect("valid interval")
}

/// `σ' = σ` on an arbitrary box.
pub fn toy_identity(state_box: BoxRegion) -> ScenarioSystem {
    toy("identity", state_box, [Unsafe, Unsafe], no_action(), 1e-6, |x, _| x)
}

/// `σ' = σ + 1` on `[0, 3]`, upper face unsafe.
pub fn toy_shift() -> ScenarioSystem {
    toy("shift", interval(0.0, 3.0), [Truncate, Unsafe], no_action(), 1.0, |x, _| x + 1.0)
}

/// `σ' = σ/2 + u` on `[-1, 1]` with `u ∈ [-a, a]`, truncating faces.
pub fn toy_shrink(a: f64) -> ScenarioSystem {
    let actions = if a > 0.0 { ActionSet::Box(interval(-a, a)) } else { no_action() };
    toy("shrink", interval(-1.0, 1.0), [Truncate, Truncate], actions, 0.5 + a.max(0.0), |x, u| 0.5 * x + u)
}

/// `σ' = -σ` on `[-1, 1]`.
pub fn toy_flip() -> ScenarioSystem {
    toy("flip", interval(-1.0, 1.0), [Unsafe, Unsafe], no_action(), 2.0, |x, _| -x)
}

/// `σ' = σ - 5` below 1, fixed otherwise, on `[0, 10]` with the lower face unsafe.
/// The invariant set is `[1, 10]`.
pub fn toy_threshold() -> ScenarioSystem {
    toy("threshold", interval(0.0, 10.0), [Unsafe, Truncate], no_action(), 5.0, |x, _| if x < 1.0 { x - 5.0 } else { x })
}

/// Two invariant basins `[-10, -1]` and `[1, 10]` separated by an unsafe gap.
///
/// Inside `|σ| < 1` the state jumps past the unsafe upper face. Elsewhere the
/// action `u ∈ [-0.1, 0.1]` drifts the state within its own basin, reflecting at
/// the basin ends.
pub fn toy_two_basins() -> ScenarioSystem {
    toy("two_basins", interval(-10.0, 10.0), [Truncate, Unsafe], ActionSet::Box(interval(-0.1, 0.1)), 101.0, |x, u| {
        if x.abs() < 1.0 {
            return x + 100.0;
        }
        let mut t = (x.abs() - 1.0) / 9.0 + u;
        if t < 0.0 {
            t = -t;
        } else if t > 1.0 {
            t = 2.0 - t;
        }
        x.signum() * (1.0 + 9.0 * t)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::StepClass;

    #[test]
    fn shift_exits_top() {
        let s = toy_shift();
        let o = s.step(&[2.5], &[0.0], &[]).unwrap();
        assert!(matches!(o.class, StepClass::Unsafe(_)));
        assert_eq!(o.next, vec![3.5]);
    }

    #[test]
    fn basins_stay_apart() {
        let s = toy_two_basins();
        for x in [1.0, 5.0, 10.0, -1.0, -5.0, -10.0] {
            for u in [-0.1, 0.0, 0.1] {
                let o = s.step(&[x], &[u], &[]).unwrap();
                assert_eq!(o.class, StepClass::Inside);
                assert!(o.next[0].abs() >= 1.0 && o.next[0].signum() == x.signum(), "{x} {u} -> {:?}", o.next);
            }
        }
        assert!(matches!(s.step(&[0.5], &[0.0], &[]).unwrap().class, StepClass::Unsafe(_)));
    }

    #[test]
    fn threshold_split() {
        let s = toy_threshold();
        assert!(matches!(s.step(&[0.99], &[0.0], &[]).unwrap().class, StepClass::Unsafe(_)));
        assert_eq!(s.step(&[1.0], &[0.0], &[]).unwrap().class, StepClass::Inside);
    }

    #[test]
    fn identity_is_fixed() {
        let s = toy_identity(BoxRegion::from_bounds(&[(0.0, 2.0), (0.0, 2.0)]).unwrap());
        assert_eq!(s.step(&[0.3, 1.7], &[0.0], &[]).unwrap().next, vec![0.3, 1.7]);
    }
}
