//! Rules, Kappa systems, model files and expansion into reaction networks.

pub mod expr;
pub mod model;
pub mod network;
pub mod rule;
pub mod system;

pub use expr::{parse_expr, Compiled, Expr, ExprError};
pub use model::{parse_model, print_model, ErrorCode, ModelError};
pub use network::{
    binomial, expand, ode_rhs, propensity, Cap, ExpandError, NetObservable, NetObservableKind, NetRate, Reaction,
    ReactionNetwork, DEFAULT_MAX_REACTIONS, DEFAULT_MAX_SPECIES,
};
pub use rule::{classify_species, validate_rule, Column, Edit, Origin, RateLaw, Role, Rule, RuleError, SideComponent};
pub use system::{pattern_weight, KappaSystem, Observable, ObservableKind};
