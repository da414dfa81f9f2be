use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::replay::ReplayBuffer;
use super::report::{cost, Hyper, QuantOutcome, RunReport};
use super::state::{replay_apply, QuantState};
use super::weights::Alpha;
use crate::error::{Error, Result};
use crate::geometry::BoxRegion;
use crate::scenario::{run_seeded, ActionSet, Policy, ScenarioSystem, Trajectory};
use crate::validation::sample_size_probabilistic;

#[derive(Debug, Clone)]
pub struct SpeOptions {
    /// Bias starts toward the pruned set.
    pub prioritized: bool,
    /// Power `p` of `α(x) = x^p`.
    pub power: f64,
    /// Re-evaluate stored runs after every decay.
    pub replay: bool,
    /// Runs kept in memory before spilling to disk.
    pub replay_cap: usize,
    /// Sample from Γ* instead of Γ.
    pub adversarial: bool,
    pub workers: usize,
    /// Smallest volume of an invariant component the caller cares about.
    pub min_feature_volume: Option<f64>,
    pub keep_trajectories: bool,
    pub timing: bool,
}

impl Default for SpeOptions {
    fn default() -> Self {
        SpeOptions {
            prioritized: true,
            power: 1.0,
            replay: true,
            replay_cap: 1 << 16,
            adversarial: false,
            workers: 1,
            min_feature_volume: None,
            keep_trajectories: false,
            timing: false,
        }
    }
}

/// Speculative batch size: one in the reference mode.
fn batch_len(workers: usize) -> usize {
    if workers > 1 {
        32 * workers
    } else {
        1
    }
}

pub(crate) fn pool(workers: usize) -> Result<Option<rayon::ThreadPool>> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| Error::Precondition(e.to_string()))
}

pub(crate) fn rollouts(
    sys: &ScenarioSystem,
    pool: Option<&rayon::ThreadPool>,
    jobs: &[(Vec<f64>, u64)],
    k: usize,
    policy: &Policy,
) -> Result<Vec<Trajectory>> {
    let one = |(s, seed): &(Vec<f64>, u64)| run_seeded(sys, s, k, policy, *seed);
    match pool {
        Some(p) => p.install(|| jobs.par_iter().map(one).collect()),
        None => jobs.iter().map(one).collect(),
    }
}

fn resolution_warning(delta0: f64, n: usize, min_volume: Option<f64>) -> Option<String> {
    let cell = (delta0 / 2.0).powi(n as i32);
    match min_volume {
        None => Some(format!(
            "initial resolution unchecked: no minimum feature volume declared ((delta0/2)^n = {cell})"
        )),
        Some(m) if cell > m => {
            Some(format!("delta0 may be too coarse: (delta0/2)^n = {cell} exceeds the declared minimum feature volume {m}"))
        }
        Some(_) => None,
    }
}

/// Synchronous pruning and exploration.
///
/// Starts from the `δ₀` lattice of `domain`. Each fresh run from a live centre
/// either exits unsafely (the start and everything that led to it is discarded),
/// discovers states outside the cover (added as new vertices), or leaves the
/// set unchanged. After `N_ε` unchanged runs in a row the resolution decays by
/// `γ`; the run stops once the next decay would pass `δ_min`, or at the budget.
pub fn quantify_spe(
    sys: &ScenarioSystem,
    domain: &BoxRegion,
    actions: &ActionSet,
    hyper: &Hyper,
    opts: &SpeOptions,
    seed: u64,
) -> Result<QuantOutcome> {
    hyper.validate()?;
    let clock = Instant::now();
    let n_eps = sample_size_probabilistic(hyper.epsilon, hyper.beta)?;
    let policy = if opts.adversarial { Policy::adversarial_for(sys) } else { Policy::Uniform(actions.clone()) };
    let alpha = opts.prioritized.then_some(Alpha { power: opts.power });
    if let Some(a) = alpha {
        if !(a.power >= 1.0) {
            return Err(crate::error::param("power", "must be at least 1"));
        }
    }
    let mut warnings: Vec<String> = resolution_warning(hyper.delta0, domain.dim(), opts.min_feature_volume).into_iter().collect();
    let mut st = QuantState::new(domain, hyper.delta0, n_eps, alpha)?;
    let mut buffer = ReplayBuffer::with_cap(opts.replay_cap);
    let mut kept = Vec::new();
    let pool = pool(opts.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = batch_len(opts.workers);

    let converged = 'run: loop {
        if st.live_count() == 0 {
            break true;
        }
        if st.n_fresh() >= hyper.n {
            break false;
        }
        let m = (batch as u64).min(hyper.n - st.n_fresh()) as usize;
        let mut ids = Vec::with_capacity(m);
        let mut jobs = Vec::with_capacity(m);
        for _ in 0..m {
            let id = st.sample_start(&mut rng)?;
            ids.push(id);
            jobs.push((st.cover().center(id).to_vec(), rng.next_u64()));
        }
        let runs = rollouts(sys, pool.as_ref(), &jobs, hyper.k, &policy)?;
        for (id, mut t) in ids.into_iter().zip(runs) {
            t.start_cell = Some(id);
            let eff = st.observe(&t, id)?;
            st.count_fresh(eff);
            if opts.keep_trajectories {
                kept.push(t.clone());
            }
            if opts.replay {
                buffer.push(t)?;
            }
            if st.is_stable() {
                if hyper.gamma * st.delta() < hyper.delta_min * (1.0 - 1e-9) {
                    break 'run true;
                }
                st.decay(hyper.gamma)?;
                if opts.replay {
                    replay_apply(&buffer, &mut st)?;
                }
                continue 'run;
            }
            if eff.changed() {
                // Later runs in the batch were drawn from a stale distribution.
                continue 'run;
            }
        }
    };
    if !converged {
        warnings.push(format!("sample budget {} exhausted before the set stabilised", hyper.n));
    }
    let n_pruned = st.pruned().len();
    let report = RunReport {
        algorithm: "qnt-spe".into(),
        seed,
        hyper: *hyper,
        n_fresh_samples: st.n_fresh(),
        n_replayed: st.n_replayed(),
        n_decays: st.decays(),
        final_delta: st.delta(),
        cell_count: st.cover().active_count(),
        volume: st.cover().volume(),
        cost: cost(st.cover(), actions),
        wall_time: opts.timing.then(|| clock.elapsed().as_secs_f64()),
        converged,
        n_pruned,
        restarts: 0,
        warnings,
    };
    Ok(QuantOutcome { cover: st.into_cover(), actions: actions.clone(), report, trajectories: kept })
}
