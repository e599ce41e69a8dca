use std::collections::{BTreeMap, BTreeSet};

use super::expr::Expr;
use super::rule::{RateLaw, Rule};
use crate::kappa::graph::SiteGraph;
use crate::kappa::{automorphisms, embeddings, Signature, Species};

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    /// Occurrences of a connected pattern.
    Pattern(SiteGraph),
    Closed(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub kind: ObservableKind,
}

impl Observable {
    /// Contribution of one copy of `sp` to a pattern observable; `0` for
    /// closed observables.
    pub fn weight(&self, sp: &Species) -> f64 {
        match &self.kind {
            ObservableKind::Pattern(p) => pattern_weight(p, sp),
            ObservableKind::Closed(_) => 0.0,
        }
    }

    /// Whether the observable reads the copy number of `sp`.
    pub fn depends_on(&self, sp: &Species) -> bool {
        match &self.kind {
            ObservableKind::Pattern(p) => pattern_weight(p, sp) > 0.0,
            ObservableKind::Closed(e) => {
                e.species_refs().contains(sp.key()) || e.patterns().iter().any(|p| pattern_weight(p, sp) > 0.0)
            }
        }
    }
}

/// Occurrences of pattern `p` in one copy of `sp`, counted up to the
/// pattern's own symmetries.
pub fn pattern_weight(p: &SiteGraph, sp: &Species) -> f64 {
    let n = embeddings(p, sp.graph()).len();
    if n == 0 {
        return 0.0;
    }
    n as f64 / automorphisms(p) as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KappaSystem {
    pub signature: Signature,
    pub constants: BTreeMap<String, f64>,
    pub init: BTreeMap<Species, u64>,
    pub observables: Vec<Observable>,
    pub rules: Vec<Rule>,
}

impl KappaSystem {
    pub fn initial_count(&self, sp: &Species) -> u64 {
        self.init.get(sp).copied().unwrap_or(0)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Agent names occurring in rules, the initial mixture or pattern
    /// observables.
    pub fn agents_in_use(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.rules.iter().flat_map(|r| r.agent_names()).map(str::to_string).collect();
        for sp in self.init.keys() {
            out.extend(sp.graph().agent_names().map(str::to_string));
        }
        for o in &self.observables {
            match &o.kind {
                ObservableKind::Pattern(p) => out.extend(p.agent_names().map(str::to_string)),
                ObservableKind::Closed(e) => {
                    for p in e.patterns() {
                        out.extend(p.agent_names().map(str::to_string));
                    }
                }
            }
        }
        out
    }

    /// A rule name not yet taken, derived from `base`.
    pub fn fresh_rule_name(&self, base: &str) -> String {
        fresh(base, |n| self.rule(n).is_some())
    }

    /// A constant name not yet taken, derived from `base`.
    pub fn fresh_constant(&self, base: &str) -> String {
        fresh(base, |n| self.constants.contains_key(n))
    }

    pub fn fresh_agent(&self, base: &str) -> String {
        fresh(base, |n| self.signature.agent(n).is_some())
    }

    /// Converts deterministic mass-action constants to stochastic ones for
    /// volume `v`: a rule with `m` reactant components has its constant
    /// divided by `v^(m-1)`. Closed laws are left alone.
    pub fn with_volume(&self, v: f64) -> KappaSystem {
        let mut out = self.clone();
        for r in &mut out.rules {
            let m = r.lhs_components(&self.signature).len() as i32;
            if let RateLaw::MassAction(k) = &mut r.rate {
                *k /= v.powi(m - 1);
            }
        }
        out
    }
}

pub(crate) fn fresh(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken(n))
        .expect("unbounded name supply")
}
