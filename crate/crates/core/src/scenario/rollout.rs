use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Facet, Policy, ScenarioSystem, StepClass};
use crate::error::{param, Result};
use crate::geometry::{ActionPoint, StatePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exit {
    None,
    Unsafe(Facet),
}

/// One run of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: Option<u64>,
    pub start: StatePoint,
    pub start_cell: Option<usize>,
    pub states: Vec<StatePoint>,
    pub actions: Vec<ActionPoint>,
    pub exit: Exit,
    /// Steps clamped onto a truncating facet.
    pub truncations: usize,
}

impl Trajectory {
    pub fn is_unsafe(&self) -> bool {
        self.exit != Exit::None
    }
}

/// Rolls out up to `k - 1` steps from `sigma0`, stopping at the first unsafe exit.
pub fn run_scenario<R: Rng + ?Sized>(
    sys: &ScenarioSystem,
    sigma0: &[f64],
    k: usize,
    policy: &Policy,
    rng: &mut R,
) -> Result<Trajectory> {
    if k < 2 {
        return Err(param("K", "trajectory horizon must be at least 2"));
    }
    let mut states = Vec::with_capacity(k);
    let mut actions = Vec::with_capacity(k - 1);
    states.push(sigma0.to_vec());
    let mut exit = Exit::None;
    let mut truncations = 0;
    for _ in 1..k {
        let s = states.last().expect("non-empty");
        let u = policy.act(sys, s, rng)?;
        let w = sys.sample_disturbance(rng);
        let out = sys.step(s, &u, &w)?;
        actions.push(u);
        states.push(out.next);
        match out.class {
            StepClass::Inside => {}
            StepClass::Truncated(_) => truncations += 1,
            StepClass::Unsafe(f) => {
                exit = Exit::Unsafe(f);
                break;
            }
        }
    }
    Ok(Trajectory { seed: None, start: sigma0.to_vec(), start_cell: None, states, actions, exit, truncations })
}

/// [`run_scenario`] on a fresh ChaCha8 stream; the seed is recorded for replay.
pub fn run_seeded(sys: &ScenarioSystem, sigma0: &[f64], k: usize, policy: &Policy, seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = run_scenario(sys, sigma0, k, policy, &mut rng)?;
    t.seed = Some(seed);
    Ok(t)
}
