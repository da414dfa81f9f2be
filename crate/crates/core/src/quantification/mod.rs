//! Invariant-set quantification: the SPE algorithm and three baselines.

mod baselines;
mod graph;
mod replay;
mod report;
mod spe;
mod state;
mod weights;

pub use baselines::{
    corner_pair_proposal, quantify_adaptive, quantify_delta_pruning, quantify_vanilla, quantify_vanilla_with,
    AdaptiveOptions,
};
pub use graph::{reachable_closure, ReachGraph};
pub use replay::ReplayBuffer;
pub use report::{cost, Hyper, QuantOutcome, RunReport};
pub use spe::{quantify_spe, SpeOptions};
pub use state::{replay_apply, Effect, QuantState, ReplayStats};
pub use weights::{prioritized_weights, Alpha, SamplingWeights};

#[cfg(test)]
mod tests;
