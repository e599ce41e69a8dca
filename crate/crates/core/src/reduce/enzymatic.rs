//! Enzymatic catalysis, single and competitive.
//!
//! A group is an enzyme `e` together with branches
//! `e + S_i <-> C_i`, `C_i -> e + P_i`. When `e` is scarce the complexes
//! sit at quasi-steady state and each branch collapses to
//! `S_i -> P_i` with propensity
//!
//! ```text
//! k_cat_i * E_T * K_i * S_i / (1 + sum_l K_l * S_l)
//! ```
//!
//! where `S_i` is the product of substrate counts (binomial for repeated
//! substrates) and `K_i = k_i / (k_i- + k_cat_i)`. A catalysis rule may also
//! keep the complex intact (`C_i -> C_i + P_i`); then `K_i = k_i / k_i-` and
//! the substrates survive the reduced rule as modifiers.

use std::collections::BTreeSet;

use serde::Serialize;

use super::util::{
    all_preserved, effective_rate, multiset, pair_identical, remove_all, species_components, species_rule,
    touched_by_partial,
};
use super::{ReductionConfig, ReductionPass, ReductionStep, StepKind};
use crate::kappa::Species;
use crate::semantics::{classify_species, Expr, KappaSystem, Origin, RateLaw, Role, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Catalysis {
    /// `C -> e + P`
    Releases,
    /// `C -> C + P`
    Retains,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub binding: String,
    pub unbinding: String,
    pub catalysis: String,
    pub substrates: Vec<Species>,
    pub complex: Species,
    pub products: Vec<Species>,
    pub form: Catalysis,
    /// Reaction constants of the expanded binding, unbinding and catalysis
    /// reactions.
    pub k_bind: f64,
    pub k_unbind: f64,
    pub k_cat: f64,
}

impl Branch {
    pub fn affinity(&self) -> f64 {
        match self.form {
            Catalysis::Releases => self.k_bind / (self.k_unbind + self.k_cat),
            Catalysis::Retains => self.k_bind / self.k_unbind,
        }
    }

    fn rules(&self) -> [&str; 3] {
        [&self.binding, &self.unbinding, &self.catalysis]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnzymaticGroup {
    pub enzyme: Species,
    pub branches: Vec<Branch>,
}

impl EnzymaticGroup {
    fn rule_names(&self) -> BTreeSet<&str> {
        self.branches.iter().flat_map(|b| b.rules()).collect()
    }
}

type Sides = Option<(f64, Vec<Species>, Vec<Species>)>;

fn sides(sys: &KappaSystem) -> Vec<Sides> {
    sys.rules
        .iter()
        .map(|r| {
            let RateLaw::MassAction(k) = r.rate else { return None };
            let l = species_components(&r.lhs_components(&sys.signature))?;
            let x = species_components(&r.rhs_components(&sys.signature))?;
            Some((k, l, x))
        })
        .collect()
}

/// Structural matches, before any side condition is checked.
fn candidates(sys: &KappaSystem) -> Vec<EnzymaticGroup> {
    let sides = sides(sys);
    let mut groups: Vec<EnzymaticGroup> = Vec::new();
    for (bi, rb) in sys.rules.iter().enumerate() {
        let Some((kb, l, x)) = &sides[bi] else { continue };
        if l.len() < 2 || x.len() != 1 || !all_preserved(rb) {
            continue;
        }
        let c = &x[0];
        let ms = multiset(l);
        let from_complex = |i: usize| matches!(&sides[i], Some((_, l2, _)) if l2.len() == 1 && l2[0] == *c);
        let unbind: Vec<usize> = (0..sys.rules.len())
            .filter(|&i| from_complex(i) && multiset(&sides[i].as_ref().unwrap().2) == ms)
            .collect();
        let [ui] = unbind[..] else { continue };
        let mut tried = BTreeSet::new();
        for e in l {
            if !tried.insert(e) {
                continue;
            }
            let substrates = remove_all(l, std::slice::from_ref(e)).unwrap();
            if substrates.contains(e) {
                continue;
            }
            let cats: Vec<(usize, Catalysis, Vec<Species>)> = (0..sys.rules.len())
                .filter(|&i| i != bi && i != ui && from_complex(i))
                .filter_map(|i| {
                    let out = &sides[i].as_ref().unwrap().2;
                    if multiset(out) == ms {
                        return None;
                    }
                    if let Some(p) = remove_all(out, std::slice::from_ref(c)) {
                        Some((i, Catalysis::Retains, p))
                    } else {
                        remove_all(out, std::slice::from_ref(e)).map(|p| (i, Catalysis::Releases, p))
                    }
                })
                .collect();
            let [(ci, form, ref products)] = cats[..] else { continue };
            let (ku, kc) = (sides[ui].as_ref().unwrap().0, sides[ci].as_ref().unwrap().0);
            let branch = Branch {
                binding: rb.name.clone(),
                unbinding: sys.rules[ui].name.clone(),
                catalysis: sys.rules[ci].name.clone(),
                substrates,
                complex: c.clone(),
                products: products.clone(),
                form,
                k_bind: effective_rate(rb, *kb, sys),
                k_unbind: effective_rate(&sys.rules[ui], ku, sys),
                k_cat: effective_rate(&sys.rules[ci], kc, sys),
            };
            match groups.iter_mut().find(|g| g.enzyme == *e) {
                Some(g) => g.branches.push(branch),
                None => groups.push(EnzymaticGroup { enzyme: e.clone(), branches: vec![branch] }),
            }
            break;
        }
    }
    groups
}

fn check(sys: &KappaSystem, cfg: &ReductionConfig, g: &EnzymaticGroup) -> Result<(), String> {
    let e = &g.enzyme;
    let complexes: BTreeSet<&Species> = g.branches.iter().map(|b| &b.complex).collect();
    if complexes.len() != g.branches.len() {
        return Err(format!("branches of {e} share a complex"));
    }
    if sys.observables.iter().any(|o| o.depends_on(e)) {
        return Err(format!("enzyme {e} is observed"));
    }
    let x0 = sys.initial_count(e);
    if x0 >= cfg.enzyme_copy_threshold {
        return Err(format!("enzyme {e} starts with {x0} copies, threshold is {}", cfg.enzyme_copy_threshold));
    }
    let group = g.rule_names();
    for r in sys.rules.iter().filter(|r| !group.contains(r.name.as_str())) {
        if classify_species(r, e) != Role::Absent {
            return Err(format!("enzyme {e} occurs in rule `{}` outside the group", r.name));
        }
    }
    if touched_by_partial(sys, e) {
        return Err(format!("enzyme {e} is matched by a partial pattern"));
    }
    for b in &g.branches {
        let c = &b.complex;
        let triple: BTreeSet<&str> = b.rules().into_iter().collect();
        if let Some(r) = sys
            .rules
            .iter()
            .find(|r| !triple.contains(r.name.as_str()) && classify_species(r, c) != Role::Absent)
        {
            return Err(format!("complex {c} occurs in rule `{}` outside its branch", r.name));
        }
        if sys.observables.iter().any(|o| o.depends_on(c)) {
            return Err(format!("complex {c} is observed"));
        }
        if touched_by_partial(sys, c) {
            return Err(format!("complex {c} is matched by a partial pattern"));
        }
        if sys.initial_count(c) != 0 {
            return Err(format!("complex {c} is initially present"));
        }
    }
    Ok(())
}

/// Enzymatic groups passing every side condition.
pub fn detect_enzymatic(sys: &KappaSystem, cfg: &ReductionConfig) -> Vec<EnzymaticGroup> {
    candidates(sys).into_iter().filter(|g| check(sys, cfg, g).is_ok()).collect()
}

/// Every species matched by a candidate group, whether or not it passes.
pub(crate) fn enzymatic_species(sys: &KappaSystem) -> BTreeSet<Species> {
    let mut out = BTreeSet::new();
    for g in candidates(sys) {
        out.insert(g.enzyme.clone());
        for b in g.branches {
            out.insert(b.complex);
            out.extend(b.substrates);
        }
    }
    out
}

fn substrate_term(b: &Branch) -> Expr {
    Expr::product(multiset(&b.substrates).into_iter().map(|(s, a)| Expr::binomial(Expr::species(s.key()), a)))
}

fn rewrite(sys: &KappaSystem, g: &EnzymaticGroup) -> (KappaSystem, ReductionStep) {
    let kind = if g.branches.len() == 1 { StepKind::Enzymatic } else { StepKind::GeneralizedEnzymatic };
    let mut step = ReductionStep::new(kind);
    let mut next = sys.clone();
    let total = sys.initial_count(&g.enzyme) + g.branches.iter().map(|b| sys.initial_count(&b.complex)).sum::<u64>();
    let et = next.fresh_constant("E_T");
    next.constants.insert(et.clone(), total as f64);
    step.introduced_constants.insert(et.clone(), total as f64);
    let mut ks = Vec::new();
    for b in &g.branches {
        let name = next.fresh_constant(&format!("K_{}", b.catalysis));
        next.constants.insert(name.clone(), b.affinity());
        step.introduced_constants.insert(name.clone(), b.affinity());
        ks.push(name);
    }
    let denom = Expr::sum(
        std::iter::once(Expr::num(1.0))
            .chain(g.branches.iter().zip(&ks).map(|(b, k)| Expr::constant(k) * substrate_term(b))),
    );
    let group = g.rule_names();
    let mut added: Vec<Rule> = Vec::new();
    for (b, k) in g.branches.iter().zip(&ks) {
        let rate = Expr::num(b.k_cat) * Expr::constant(&et) * Expr::constant(k) * substrate_term(b) / denom.clone();
        let (rhs, pairs) = match b.form {
            Catalysis::Releases => (b.products.clone(), pair_identical(&b.substrates, &b.products)),
            Catalysis::Retains => (
                b.substrates.iter().chain(&b.products).cloned().collect(),
                (0..b.substrates.len()).map(|i| (i, i)).collect(),
            ),
        };
        let mut r = species_rule(b.catalysis.clone(), &b.substrates, &rhs, &pairs, RateLaw::Closed(rate.simplify()));
        r.origin = Origin::Reduction("enzymatic".into());
        step.added_rules.push(r.name.clone());
        added.push(r);
    }
    let first = sys.rules.iter().position(|r| group.contains(r.name.as_str())).unwrap();
    next.rules = Vec::with_capacity(sys.rules.len());
    for (i, r) in sys.rules.iter().enumerate() {
        if i == first {
            next.rules.append(&mut added);
        }
        if group.contains(r.name.as_str()) {
            step.removed_rules.push(r.name.clone());
        } else {
            next.rules.push(r.clone());
        }
    }
    next.init.remove(&g.enzyme);
    step.removed_species.push(g.enzyme.key().to_string());
    for b in &g.branches {
        next.init.remove(&b.complex);
        step.removed_species.push(b.complex.key().to_string());
    }
    let e = &g.enzyme;
    step.justification.push(format!("enzyme {e} is not observed"));
    step.justification.push(format!("enzyme {e} starts with {} copies", sys.initial_count(e)));
    step.justification.push(format!("enzyme {e} is neither produced nor degraded outside the group"));
    for b in &g.branches {
        step.justification.push(format!(
            "complex {} occurs only in `{}`, `{}`, `{}`, is not observed and starts at 0",
            b.complex, b.binding, b.unbinding, b.catalysis
        ));
    }
    (next, step)
}

pub struct GeneralizedEnzymatic;

impl ReductionPass for GeneralizedEnzymatic {
    fn name(&self) -> &'static str {
        "enzymatic"
    }

    fn apply(&self, sys: &KappaSystem, cfg: &ReductionConfig, notes: &mut Vec<String>) -> Option<(KappaSystem, ReductionStep)> {
        for g in candidates(sys) {
            match check(sys, cfg, &g) {
                Ok(()) => return Some(rewrite(sys, &g)),
                Err(why) => notes.push(format!("enzymatic: {why}")),
            }
        }
        None
    }
}
