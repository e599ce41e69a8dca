//! Parsing, static reduction and stochastic validation of Kappa-style
//! rule-based models.
//!
//! * [`kappa`]: agents, expressions, site-graphs, canonical species keys
//!   and embeddings.
//! * [`semantics`]: rules, systems, model files and expansion into a
//!   reaction network with mass-action or closed-form propensities.
//! * [`reduce`]: the five reduction passes and the pipeline that runs them.
//! * [`simulate`]: SSA, RK4, ensembles and the Bhattacharyya comparison.

pub mod kappa;
pub mod reduce;
pub mod semantics;
pub mod simulate;

pub use kappa::{KappaError, Signature, Species};

pub use semantics::{expand, parse_model, print_model, KappaSystem, ReactionNetwork};
pub use reduce::{reduce_all, ReductionConfig, ReductionReport};
