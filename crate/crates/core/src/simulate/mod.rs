//! Exact stochastic simulation, the deterministic limit and comparison of
//! ensembles.
//!
//! Every run draws from its own ChaCha8 stream: the generator is seeded
//! with the user seed and the stream id is the run index. Runs of a
//! reduced system use stream `2^32 + run`, so the two ensembles of a
//! comparison never share random numbers.

mod compare;
mod ode;
mod ssa;
mod stats;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::semantics::{ExpandError, ReactionNetwork};

pub use compare::{
    compare_networks, compare_systems, ensemble, scale_system, scaling_experiment, Comparison, Ensemble, Limits,
    ObservableComparison, ScalingExperiment, ScalingRow,
};
pub use ode::ode_solve;
pub use ssa::{DirectMethod, NextReactionMethod};
pub use stats::{bhattacharyya, EnsembleSummary, Histogram, ObservableSummary};

/// Offset added to the run index for the second ensemble of a comparison.
pub const REDUCED_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("propensity of reaction from rule `{rule}` is {value} at time {time}")]
    InvalidPropensity { rule: String, value: f64, time: f64 },
    #[error("concentration of species {species} dropped to {value} at time {time}; the system may be stiff")]
    NegativeConcentration { species: String, value: f64, time: f64 },
    #[error("RK4 did not reach the requested accuracy within {0} steps per grid interval")]
    StepLimit(usize),
    #[error("run {index}: {source}")]
    Run { index: u64, source: Box<SimError> },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histograms use different bins")]
    BinMismatch,
    #[error("observable `{0}` is missing from one of the systems")]
    MissingObservable(String),
    #[error("no enzymatic pattern to scale")]
    NoEnzymaticGroup,
    #[error("unknown simulator `{0}`")]
    UnknownSimulator(String),
    #[error(transparent)]
    Expand(#[from] ExpandError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub t_end: f64,
    /// Sorted sample times in `[0, t_end]`.
    pub grid: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
    pub volume: f64,
}

impl SimConfig {
    /// `n` equally spaced sample times `t_end * i / n`, `i = 1..=n`.
    pub fn uniform(t_end: f64, n: usize, runs: u64, seed: u64) -> SimConfig {
        SimConfig {
            t_end,
            grid: (1..=n).map(|i| t_end * i as f64 / n as f64).collect(),
            runs,
            seed,
            volume: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Copy numbers at each sample time.
    pub states: Vec<Vec<u64>>,
}

/// An exact sampler of the network's continuous-time Markov chain.
pub trait Simulator: Send + Sync {
    fn name(&self) -> &'static str;

    /// States at each grid time, taken after the last event not later than
    /// that time.
    fn sample(&self, net: &ReactionNetwork, grid: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u64>>, SimError>;
}

pub const SIMULATORS: [&str; 2] = ["direct", "next-reaction"];

pub fn simulator(name: &str) -> Result<Box<dyn Simulator>, SimError> {
    match name {
        "direct" => Ok(Box::new(DirectMethod)),
        "next-reaction" => Ok(Box::new(NextReactionMethod)),
        _ => Err(SimError::UnknownSimulator(name.to_string())),
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn ssa_run(net: &ReactionNetwork, cfg: &SimConfig, run_index: u64, sim: &dyn Simulator) -> Result<Trajectory, SimError> {
    let mut rng = rng_for(cfg.seed, run_index);
    let states = sim.sample(net, &cfg.grid, &mut rng)?;
    Ok(Trajectory { times: cfg.grid.clone(), states })
}

/// For each reaction, the reactions whose propensity may change when it
/// fires. A reaction always depends on itself.
pub(crate) fn dependency_graph(net: &ReactionNetwork) -> Vec<Vec<usize>> {
    let reads: Vec<BTreeSet<usize>> = net.reactions.iter().map(|r| r.dependencies()).collect();
    net.reactions
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let changed: BTreeSet<usize> = r.stoich().into_iter().map(|(i, _)| i).collect();
            (0..net.reactions.len())
                .filter(|&k| k == j || !reads[k].is_disjoint(&changed))
                .collect()
        })
        .collect()
}
