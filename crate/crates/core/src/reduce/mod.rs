//! Static reduction of Kappa systems.
//!
//! Four passes are registered by name behind [`ReductionPass`]:
//!
//! | name        | effect                                                  |
//! |-------------|---------------------------------------------------------|
//! | `src`       | merges rules with equal sides by summing their rates    |
//! | `me`        | folds constant modifiers into rates                     |
//! | `dimer`     | pools `M + M <-> M2` into a total `M_T`                 |
//! | `enzymatic` | replaces enzyme/complex triples by Michaelis-Menten laws |
//!
//! [`reduce_all`] runs them in the order `me, src, dimer, me, src,
//! enzymatic, me, src`, each to its fixpoint.

mod dimer;
mod enzymatic;
mod me;
mod src;
mod util;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::kappa::parse_expression;
use crate::semantics::{KappaSystem, ObservableKind, RateLaw};

pub use dimer::{detect_dimerization, dimer_partition, DimerCandidate, FastDimerization};
pub use enzymatic::{detect_enzymatic, Branch, Catalysis, EnzymaticGroup, GeneralizedEnzymatic};
pub use me::ModifierElimination;
pub use src::{rule_key, SimilarRuleComposition};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionConfig {
    /// Enzymes must start with fewer copies than this.
    pub enzyme_copy_threshold: u64,
    /// Names of passes to skip.
    pub disabled: BTreeSet<String>,
    /// Upper bound on applications of one pass within one stage.
    pub max_passes: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            enzyme_copy_threshold: 10,
            disabled: BTreeSet::new(),
            max_passes: 1000,
        }
    }
}

impl ReductionConfig {
    pub fn enabled(&self, pass: &str) -> bool {
        !self.disabled.contains(pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepKind {
    #[serde(rename = "SRC")]
    Src,
    #[serde(rename = "ME")]
    Me,
    FastDimer,
    Enzymatic,
    GeneralizedEnzymatic,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Src => "SRC",
            StepKind::Me => "ME",
            StepKind::FastDimer => "FastDimer",
            StepKind::Enzymatic => "Enzymatic",
            StepKind::GeneralizedEnzymatic => "GeneralizedEnzymatic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionStep {
    pub kind: StepKind,
    pub removed_rules: Vec<String>,
    pub added_rules: Vec<String>,
    pub removed_species: Vec<String>,
    pub introduced_constants: BTreeMap<String, f64>,
    pub justification: Vec<String>,
}

impl ReductionStep {
    pub(crate) fn new(kind: StepKind) -> Self {
        ReductionStep {
            kind,
            removed_rules: Vec::new(),
            added_rules: Vec::new(),
            removed_species: Vec::new(),
            introduced_constants: BTreeMap::new(),
            justification: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub steps: Vec<ReductionStep>,
    /// Candidates rejected by a check, with the reason.
    pub notes: Vec<String>,
    pub rules_before: usize,
    pub rules_after: usize,
    pub agents_before: usize,
    pub agents_after: usize,
}

impl ReductionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Union of all introduced constants.
    pub fn constants(&self) -> BTreeMap<String, f64> {
        self.steps
            .iter()
            .flat_map(|s| s.introduced_constants.clone())
            .collect()
    }
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rules: {} -> {}", self.rules_before, self.rules_after)?;
        writeln!(f, "agents: {} -> {}", self.agents_before, self.agents_after)?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "step {}: {}", i + 1, s.kind)?;
            if !s.removed_rules.is_empty() {
                writeln!(f, "  removed rules: {}", s.removed_rules.join(", "))?;
            }
            if !s.added_rules.is_empty() {
                writeln!(f, "  added rules: {}", s.added_rules.join(", "))?;
            }
            if !s.removed_species.is_empty() {
                writeln!(f, "  removed species: {}", s.removed_species.join(", "))?;
            }
            for (k, v) in &s.introduced_constants {
                writeln!(f, "  constant {k} = {v}")?;
            }
            for j in &s.justification {
                writeln!(f, "  - {j}")?;
            }
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// One reduction pattern. `apply` performs a single rewrite and returns
/// `None` when the pattern no longer applies.
pub trait ReductionPass: Send + Sync {
    fn name(&self) -> &'static str;

    fn apply(&self, sys: &KappaSystem, cfg: &ReductionConfig, notes: &mut Vec<String>) -> Option<(KappaSystem, ReductionStep)>;
}

/// Passes by name.
pub struct PassRegistry {
    passes: BTreeMap<&'static str, Box<dyn ReductionPass>>,
}

impl PassRegistry {
    pub fn empty() -> Self {
        PassRegistry { passes: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(SimilarRuleComposition));
        r.register(Box::new(ModifierElimination));
        r.register(Box::new(FastDimerization));
        r.register(Box::new(GeneralizedEnzymatic));
        r
    }

    pub fn register(&mut self, pass: Box<dyn ReductionPass>) {
        self.passes.insert(pass.name(), pass);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ReductionPass> {
        self.passes.get(name).map(|p| p.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.passes.keys().copied()
    }
}

impl Default for PassRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

/// Order in which [`reduce_all`] runs the passes.
pub const PIPELINE: [&str; 8] = ["me", "src", "dimer", "me", "src", "enzymatic", "me", "src"];

/// Applies one pass until it no longer changes the system.
pub fn run_to_fixpoint(
    pass: &dyn ReductionPass,
    mut sys: KappaSystem,
    cfg: &ReductionConfig,
    steps: &mut Vec<ReductionStep>,
    notes: &mut Vec<String>,
) -> KappaSystem {
    for _ in 0..cfg.max_passes {
        match pass.apply(&sys, cfg, notes) {
            Some((next, step)) => {
                sys = next;
                steps.push(step);
            }
            None => break,
        }
    }
    sys
}

pub fn reduce_all(sys: &KappaSystem, cfg: &ReductionConfig) -> (KappaSystem, ReductionReport) {
    reduce_with(&PassRegistry::standard(), sys, cfg)
}

pub fn reduce_with(registry: &PassRegistry, sys: &KappaSystem, cfg: &ReductionConfig) -> (KappaSystem, ReductionReport) {
    let mut steps = Vec::new();
    let mut notes = Vec::new();
    let mut cur = sys.clone();
    for name in PIPELINE {
        if !cfg.enabled(name) {
            continue;
        }
        if let Some(pass) = registry.get(name) {
            cur = run_to_fixpoint(pass, cur, cfg, &mut steps, &mut notes);
        }
    }
    notes.sort();
    notes.dedup();
    if !steps.is_empty() {
        prune_signature(&mut cur);
    }
    let report = ReductionReport {
        steps,
        notes,
        rules_before: sys.rules.len(),
        rules_after: cur.rules.len(),
        agents_before: sys.agents_in_use().len(),
        agents_after: cur.agents_in_use().len(),
    };
    (cur, report)
}

/// Drops declarations of agents no longer mentioned anywhere, keeping the
/// ones referenced from closed expressions.
fn prune_signature(sys: &mut KappaSystem) {
    let mut used = sys.agents_in_use();
    let mut keys = BTreeSet::new();
    for r in &sys.rules {
        if let RateLaw::Closed(e) = &r.rate {
            keys.extend(e.species_refs());
        }
    }
    for o in &sys.observables {
        if let ObservableKind::Closed(e) = &o.kind {
            keys.extend(e.species_refs());
        }
    }
    for k in keys {
        if let Ok(e) = parse_expression(&k, &sys.signature) {
            used.extend(e.agents().map(|a| a.name.clone()));
        }
    }
    sys.signature.retain(|n| used.contains(n));
}
