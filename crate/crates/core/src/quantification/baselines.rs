//! Reference quantifiers that are known to be incomplete or non-optimal.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{cost, Hyper, QuantOutcome, RunReport};
use super::spe::{pool, rollouts};
use crate::error::Result;
use crate::geometry::{BoxRegion, DeltaCover, StatePoint};
use crate::scenario::{run_seeded, ActionSet, Policy, ScenarioSystem};
use crate::validation::{sample_size_probabilistic, validate_eps_delta, SamplingOptions};

fn report(algorithm: &str, seed: u64, hyper: &Hyper, cover: &DeltaCover, actions: &ActionSet) -> RunReport {
    RunReport {
        algorithm: algorithm.into(),
        seed,
        hyper: *hyper,
        n_fresh_samples: 0,
        n_replayed: 0,
        n_decays: 0,
        final_delta: cover.radius(),
        cell_count: cover.active_count(),
        volume: cover.volume(),
        cost: cost(cover, actions),
        wall_time: None,
        converged: false,
        n_pruned: 0,
        restarts: 0,
        warnings: Vec::new(),
    }
}

/// Sub-box with each axis spanned by two uniform points of the same axis of `domain`.
pub fn corner_pair_proposal<R: Rng + ?Sized>(domain: &BoxRegion, rng: &mut R) -> BoxRegion {
    let a = domain.sample(rng);
    let b = domain.sample(rng);
    let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
    BoxRegion::new(lo, hi).unwrap_or_else(|_| domain.clone())
}

/// Vanilla sampling with the corner-pair proposal.
pub fn quantify_vanilla(sys: &ScenarioSystem, domain: &BoxRegion, actions: &ActionSet, hyper: &Hyper, seed: u64) -> Result<QuantOutcome> {
    quantify_vanilla_with(sys, domain, actions, hyper, seed, |d, r| corner_pair_proposal(d, r))
}

/// Vanilla sampling: up to `N` proposed sub-boxes, each checked with `N_ε`
/// εδ-validation runs on its `δ₀` cover; the first one that passes is returned.
pub fn quantify_vanilla_with(
    sys: &ScenarioSystem,
    domain: &BoxRegion,
    actions: &ActionSet,
    hyper: &Hyper,
    seed: u64,
    mut propose: impl FnMut(&BoxRegion, &mut ChaCha8Rng) -> BoxRegion,
) -> Result<QuantOutcome> {
    hyper.validate()?;
    let n_eps = sample_size_probabilistic(hyper.epsilon, hyper.beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fresh = 0;
    let opts = SamplingOptions { claimed: Some((hyper.epsilon, hyper.beta)), ..Default::default() };
    for attempt in 1..=hyper.n {
        let sub = propose(domain, &mut rng);
        let cover = DeltaCover::build(&sub, hyper.delta0)?;
        let verdict = validate_eps_delta(sys, &cover, actions, n_eps, hyper.k, &mut rng, &opts)?;
        fresh += verdict.samples_used;
        if verdict.result {
            let mut r = report("qnt-vs", seed, hyper, &cover, actions);
            r.n_fresh_samples = fresh;
            r.restarts = attempt - 1;
            r.converged = true;
            return Ok(QuantOutcome { cover, actions: actions.clone(), report: r, trajectories: Vec::new() });
        }
    }
    let empty = DeltaCover::empty(domain.clone(), hyper.delta0)?;
    let mut r = report("qnt-vs", seed, hyper, &empty, actions);
    r.n_fresh_samples = fresh;
    r.restarts = hyper.n;
    r.warnings.push(format!("no proposed sub-box validated in {} attempts", hyper.n));
    Ok(QuantOutcome { cover: empty, actions: actions.clone(), report: r, trajectories: Vec::new() })
}

/// δ-pruning: `N` runs from uniform live centres of the `δ₀` lattice; a start is
/// discarded as soon as its run leaves the current live cover.
pub fn quantify_delta_pruning(
    sys: &ScenarioSystem,
    domain: &BoxRegion,
    actions: &ActionSet,
    hyper: &Hyper,
    seed: u64,
) -> Result<QuantOutcome> {
    hyper.validate()?;
    let mut cover = DeltaCover::build(domain, hyper.delta0)?;
    let policy = Policy::Uniform(actions.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<usize> = cover.active_indices().collect();
    let mut pruned: Vec<StatePoint> = Vec::new();
    let mut fresh = 0;
    while fresh < hyper.n && !live.is_empty() {
        let slot = rng.random_range(0..live.len());
        let id = live[slot];
        let t = run_seeded(sys, cover.center(id), hyper.k, &policy, rng.next_u64())?;
        fresh += 1;
        let left = t.is_unsafe() || t.states.iter().skip(1).any(|s| !cover.contains(s));
        if left {
            cover.deactivate(id);
            live.swap_remove(slot);
            pruned.push(cover.center(id).to_vec());
        }
    }
    let mut r = report("qnt-dp", seed, hyper, &cover, actions);
    r.n_fresh_samples = fresh;
    r.n_pruned = pruned.len();
    r.converged = true;
    Ok(QuantOutcome { cover, actions: actions.clone(), report: r, trajectories: Vec::new() })
}

#[derive(Debug, Clone, Default)]
pub struct AdaptiveOptions {
    /// Use this point instead of a uniform draw for the first seed.
    pub forced_seed: Option<StatePoint>,
    pub workers: usize,
    pub timing: bool,
}

/// Adaptive exploration from a single seed point.
///
/// The sample set grows with every visited state outside the current cover.
/// An unsafe exit throws the set away and restarts from a fresh uniform seed.
/// After `N_ε` unchanged runs the radius shrinks by `γ`. When the budget runs
/// out before the current seed has survived a full window, the result is empty.
pub fn quantify_adaptive(
    sys: &ScenarioSystem,
    domain: &BoxRegion,
    actions: &ActionSet,
    hyper: &Hyper,
    opts: &AdaptiveOptions,
    seed: u64,
) -> Result<QuantOutcome> {
    hyper.validate()?;
    let clock = Instant::now();
    let n_eps = sample_size_probabilistic(hyper.epsilon, hyper.beta)?;
    let policy = Policy::Uniform(actions.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = pool(opts.workers)?;
    let batch = if opts.workers > 1 { 32 * opts.workers } else { 1 };

    let first = match &opts.forced_seed {
        Some(p) => p.clone(),
        None => domain.sample(&mut rng),
    };
    let mut cover = DeltaCover::from_centers(domain.clone(), hyper.delta0, vec![first])?;
    let mut stable = 0u64;
    let mut fresh = 0u64;
    let mut decays = 0u32;
    let mut restarts = 0u64;
    // Windows completed since the last restart.
    let mut windows = 0u32;

    let converged = 'run: loop {
        if fresh >= hyper.n {
            break false;
        }
        let m = (batch as u64).min(hyper.n - fresh) as usize;
        let jobs: Vec<(Vec<f64>, u64)> = (0..m)
            .map(|_| {
                let id = rng.random_range(0..cover.len());
                (cover.center(id).to_vec(), rng.next_u64())
            })
            .collect();
        let runs = rollouts(sys, pool.as_ref(), &jobs, hyper.k, &policy)?;
        for t in runs {
            fresh += 1;
            if t.is_unsafe() {
                let s0 = domain.sample(&mut rng);
                cover = DeltaCover::from_centers(domain.clone(), cover.radius(), vec![s0])?;
                stable = 0;
                restarts += 1;
                windows = 0;
                continue 'run;
            }
            let mut grew = false;
            for s in t.states.iter().skip(1) {
                if !cover.contains(s) {
                    cover.push(s.clone())?;
                    grew = true;
                }
            }
            if grew {
                stable = 0;
                continue 'run;
            }
            stable += 1;
            if stable >= n_eps {
                windows += 1;
                if hyper.gamma * cover.radius() < hyper.delta_min * (1.0 - 1e-9) {
                    break 'run true;
                }
                cover = cover.with_radius(hyper.gamma * cover.radius())?;
                decays += 1;
                stable = 0;
                continue 'run;
            }
        }
    };
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("sample budget {} exhausted before the set stabilised", hyper.n));
        if windows == 0 {
            warnings.push(format!("no seed survived a full window ({restarts} restarts); returning an empty set"));
            cover = DeltaCover::empty(domain.clone(), cover.radius())?;
        }
    }
    let mut r = report("qnt-ae", seed, hyper, &cover, actions);
    r.n_fresh_samples = fresh;
    r.n_decays = decays;
    r.restarts = restarts;
    r.converged = converged;
    r.wall_time = opts.timing.then(|| clock.elapsed().as_secs_f64());
    r.warnings = warnings;
    Ok(QuantOutcome { cover, actions: actions.clone(), report: r, trajectories: Vec::new() })
}
