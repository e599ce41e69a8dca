//! Kappa expressions: syntax, site-graphs, structural equivalence,
//! canonical forms and embeddings.

pub mod canon;
pub mod embed;
pub mod graph;
pub mod signature;
pub mod syntax;

use thiserror::Error;

pub use canon::{canonical_text, canonicalize_species, Species};
pub use embed::{automorphisms, embeddings, occurrence_count, Embedding};
pub use graph::{check_pattern, GAgent, GSite, Link, SiteGraph};
pub use signature::{parse_signature, AgentDecl, Signature, SiteDecl};
pub use syntax::{normalize, parse_expression, structurally_equal, Agent, Binding, Entry, Expression, Site};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KappaError {
    #[error("syntax error at column {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("agent `{0}` declared twice")]
    DuplicateAgent(String),
    #[error("site `{site}` declared twice on agent `{agent}`")]
    DuplicateSiteDecl { agent: String, site: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{agent}` has no site `{site}`")]
    UnknownSite { agent: String, site: String },
    #[error("site `{agent}.{site}` has no internal state `{state}`")]
    UnknownState { agent: String, site: String, state: String },
    #[error("site `{agent}.{site}` cannot bind")]
    NotBindable { agent: String, site: String },
    #[error("site `{site}` occurs twice in an interface of `{agent}`")]
    RepeatedSite { agent: String, site: String },
    #[error("bond label {label} occurs {count} times")]
    LabelOveruse { label: u32, count: usize },
    #[error("dangling bond: label {0} occurs once")]
    DanglingBond(u32),
    #[error("not a mixture: {0}")]
    NotFullySpecified(String),
    #[error("not a species: site-graph is not connected")]
    NotConnected,
}

impl KappaError {
    /// Column of a syntax error, when known.
    pub fn column(&self) -> Option<usize> {
        match self {
            KappaError::Syntax { col, .. } => Some(*col),
            _ => None,
        }
    }
}
