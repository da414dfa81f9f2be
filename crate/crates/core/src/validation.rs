//! Validation of a candidate set: the δ, ε and εδ variants plus their sample bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::geometry::{BoundaryBand, BoxRegion, DeltaCover, StatePoint};
use crate::scenario::{run_seeded, ActionSet, Exit, Facet, Policy, ScenarioSystem, Trajectory};

/// Smallest `N` with `(1 - ε)^N <= β`, at least 1.
pub fn sample_size_probabilistic(epsilon: f64, beta: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(param("epsilon", "must lie in (0, 1]"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(param("beta", "must lie in (0, 1)"));
    }
    if epsilon == 1.0 {
        return Ok(1);
    }
    let n = (beta.ln() / (-epsilon).ln_1p()).ceil();
    Ok((n as u64).max(1))
}

/// Number of `δ`-cells needed to tile a set of the given volume: `⌈|Φ| / (2δ)^n⌉`.
pub fn sample_size_resolution(volume: f64, delta: f64, n: u32) -> Result<u64> {
    if !(volume > 0.0) || !(delta > 0.0) || n == 0 {
        return Err(param("volume/delta/n", "must all be positive"));
    }
    let ratio = volume / (2.0 * delta).powi(n as i32);
    // guard against 13952/8 landing a hair above an integer
    let r = ratio.round();
    Ok(if (ratio - r).abs() <= 1e-9 * r.max(1.0) { r as u64 } else { ratio.ceil() as u64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceParams {
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Violation {
    UnsafeExit { facet: Facet, step: usize },
    LeftSet { step: usize },
}

/// A failing rollout, replayable from `(start, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub seed: u64,
    pub start: StatePoint,
    pub violation: Violation,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationVerdict {
    pub result: bool,
    pub samples_used: u64,
    pub counterexample: Option<Counterexample>,
    pub params: ConfidenceParams,
    /// Fewer samples than the claimed (ε, β) requires.
    pub under_sampled: bool,
}

/// Flat record for report files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub result: bool,
    pub n_samples: u64,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub counterexample_seed: Option<u64>,
    pub counterexample_start: Option<StatePoint>,
}

impl ValidationVerdict {
    pub fn summary(&self) -> VerdictSummary {
        VerdictSummary {
            result: self.result,
            n_samples: self.samples_used,
            epsilon: self.params.epsilon,
            beta: self.params.beta,
            delta: self.params.delta,
            counterexample_seed: self.counterexample.as_ref().map(|c| c.seed),
            counterexample_start: self.counterexample.as_ref().map(|c| c.start.clone()),
        }
    }
}

/// First state after the start that is unsafe or fails `member`.
pub fn first_violation(t: &Trajectory, member: impl Fn(&[f64]) -> bool) -> Option<Violation> {
    let last = t.states.len() - 1;
    for (i, s) in t.states.iter().enumerate().skip(1) {
        if i == last {
            if let Exit::Unsafe(facet) = t.exit {
                return Some(Violation::UnsafeExit { facet, step: i });
            }
        }
        if !member(s) {
            return Some(Violation::LeftSet { step: i });
        }
    }
    None
}

/// Re-runs a counterexample from its logged start and seed.
pub fn replay(sys: &ScenarioSystem, cx: &Counterexample, k: usize, policy: &Policy) -> Result<Trajectory> {
    run_seeded(sys, &cx.start, k, policy, cx.seed)
}

/// Runs `jobs` in index order (chunked, parallel within a chunk when `workers > 1`)
/// and returns the earliest failure together with the number of jobs evaluated.
fn earliest_failure<F>(jobs: &[(StatePoint, u64)], workers: usize, eval: F) -> Result<(u64, Option<Counterexample>)>
where
    F: Fn(&StatePoint, u64) -> Result<Option<Counterexample>> + Sync,
{
    const CHUNK: usize = 256;
    let pool = if workers > 1 {
        Some(rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::Precondition(e.to_string()))?)
    } else {
        None
    };
    for (c, chunk) in jobs.chunks(CHUNK).enumerate() {
        let results: Vec<Result<Option<Counterexample>>> = match &pool {
            Some(p) => p.install(|| chunk.par_iter().map(|(s, seed)| eval(s, *seed)).collect()),
            None => {
                let mut out = Vec::with_capacity(chunk.len());
                for (s, seed) in chunk {
                    let r = eval(s, *seed);
                    let stop = matches!(r, Ok(Some(_)) | Err(_));
                    out.push(r);
                    if stop {
                        break;
                    }
                }
                out
            }
        };
        for (j, r) in results.into_iter().enumerate() {
            if let Some(cx) = r? {
                return Ok(((c * CHUNK + j + 1) as u64, Some(cx)));
            }
        }
    }
    Ok((jobs.len() as u64, None))
}

fn verdict(used: u64, cx: Option<Counterexample>, params: ConfidenceParams, under: bool) -> ValidationVerdict {
    ValidationVerdict { result: cx.is_none(), samples_used: used, counterexample: cx, params, under_sampled: under }
}

/// Visits every active centre once with a deterministic policy.
pub fn validate_delta(sys: &ScenarioSystem, cover: &DeltaCover, k: usize, policy: &Policy) -> Result<ValidationVerdict> {
    if !policy.is_deterministic() {
        return Err(Error::Precondition("δ-validation needs a deterministic policy".into()));
    }
    if sys.disturbance_bound() > 0.0 {
        return Err(Error::Precondition("δ-validation needs zero disturbance".into()));
    }
    if cover.is_empty() {
        return Err(Error::EmptyCover);
    }
    let jobs: Vec<(StatePoint, u64)> = cover.active_indices().map(|i| (cover.center(i).to_vec(), i as u64)).collect();
    let (used, cx) = earliest_failure(&jobs, 1, |s, seed| check(sys, s, seed, k, policy, |p| cover.contains(p)))?;
    Ok(verdict(used, cx, ConfidenceParams { epsilon: None, beta: None, delta: Some(cover.radius()) }, false))
}

fn check(
    sys: &ScenarioSystem,
    start: &StatePoint,
    seed: u64,
    k: usize,
    policy: &Policy,
    member: impl Fn(&[f64]) -> bool,
) -> Result<Option<Counterexample>> {
    let t = run_seeded(sys, start, k, policy, seed)?;
    Ok(first_violation(&t, member).map(|violation| Counterexample { seed, start: start.clone(), violation, trajectory: t }))
}

/// Set under ε-validation: a box sampled uniformly, or a cover sampled over its centres.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Box(&'a BoxRegion),
    Cover(&'a DeltaCover),
}

impl Region<'_> {
    fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.contains(p),
            Region::Cover(c) => c.contains(p),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SamplingOptions {
    /// The (ε, β) the caller wants to claim; used for the under-sampling flag.
    pub claimed: Option<(f64, f64)>,
    /// Restrict initial centres to a boundary band.
    pub band: Option<BoundaryBand>,
    pub workers: usize,
}

fn under_sampled(n: u64, claimed: Option<(f64, f64)>) -> Result<bool> {
    match claimed {
        Some((e, b)) => Ok(n < sample_size_probabilistic(e, b)?),
        None => Ok(false),
    }
}

fn params(claimed: Option<(f64, f64)>, delta: Option<f64>) -> ConfidenceParams {
    ConfidenceParams { epsilon: claimed.map(|c| c.0), beta: claimed.map(|c| c.1), delta }
}

/// `n` rollouts from i.i.d. uniform starts; true iff none leaves the region.
pub fn validate_eps<R: Rng + ?Sized>(
    sys: &ScenarioSystem,
    region: Region<'_>,
    n: u64,
    k: usize,
    policy: &Policy,
    rng: &mut R,
    opts: &SamplingOptions,
) -> Result<ValidationVerdict> {
    let under = under_sampled(n, opts.claimed)?;
    let starts: Vec<StatePoint> = match region {
        Region::Box(b) => (0..n).map(|_| b.sample(rng)).collect(),
        Region::Cover(c) => {
            let ids = start_ids(c, opts.band.as_ref())?;
            (0..n).map(|_| c.center(ids[rng.random_range(0..ids.len())]).to_vec()).collect()
        }
    };
    let jobs: Vec<(StatePoint, u64)> = starts.into_iter().map(|s| (s, rng.next_u64())).collect();
    let (used, cx) = earliest_failure(&jobs, opts.workers, |s, seed| check(sys, s, seed, k, policy, |p| region.contains(p)))?;
    let delta = match region {
        Region::Cover(c) => Some(c.radius()),
        Region::Box(_) => None,
    };
    Ok(verdict(used, cx, params(opts.claimed, delta), under))
}

fn start_ids(cover: &DeltaCover, band: Option<&BoundaryBand>) -> Result<Vec<usize>> {
    let ids: Vec<usize> = cover.active_indices().filter(|&i| band.is_none_or(|b| b.contains(cover.center(i)))).collect();
    if ids.is_empty() {
        return Err(if cover.is_empty() { Error::EmptyCover } else { Error::Precondition("boundary band holds no centre".into()) });
    }
    Ok(ids)
}

/// `n` rollouts from uniform cover centres with i.i.d. uniform actions from `actions`;
/// membership is the distance check against the cover.
pub fn validate_eps_delta<R: Rng + ?Sized>(
    sys: &ScenarioSystem,
    cover: &DeltaCover,
    actions: &ActionSet,
    n: u64,
    k: usize,
    rng: &mut R,
    opts: &SamplingOptions,
) -> Result<ValidationVerdict> {
    let policy = Policy::Uniform(actions.clone());
    validate_eps(sys, Region::Cover(cover), n, k, &policy, rng, opts)
}
