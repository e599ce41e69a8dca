//! Modifier elimination.
//!
//! A species that only ever occurs as a modifier keeps its initial count
//! forever, so its occurrences can be folded into the rates. A rule with
//! `m` occurrences of a species with `n0` copies and `s` automorphisms is
//! multiplied by `s^m * C(n0, m)`; closed laws get `n0` substituted.

use std::collections::BTreeSet;

use super::util::{is_noop, occurrences, rebuild, rule_species, touched_by_partial};
use super::{ReductionConfig, ReductionPass, ReductionStep, StepKind};
use crate::kappa::{automorphisms, Species};
use crate::semantics::{binomial, classify_species, Expr, KappaSystem, Origin, RateLaw, Role, Rule};

pub struct ModifierElimination;

/// Drops the occurrences of `sp` from both sides, provided every lhs
/// occurrence is carried by the columns onto an rhs occurrence.
fn strip(r: &Rule, sys: &KappaSystem, sp: &Species) -> Option<(Rule, u32)> {
    let lo = occurrences(&r.lhs_components(&sys.signature), sp);
    let ro = occurrences(&r.rhs_components(&sys.signature), sp);
    let mut drop_l = BTreeSet::new();
    let mut drop_r = BTreeSet::new();
    let mut used = vec![false; ro.len()];
    for occ in &lo {
        let mut image: Vec<usize> = Vec::with_capacity(occ.len());
        for &a in occ {
            let x = r.columns.iter().find(|c| c.0 == Some(a))?.1?;
            image.push(x);
        }
        image.sort_unstable();
        let j = ro.iter().enumerate().position(|(j, o)| !used[j] && *o == image)?;
        used[j] = true;
        drop_l.extend(occ.iter().copied());
        drop_r.extend(image);
    }
    Some((rebuild(r, &drop_l, &drop_r, &[], &[], &[]), lo.len() as u32))
}

impl ReductionPass for ModifierElimination {
    fn name(&self) -> &'static str {
        "me"
    }

    fn apply(&self, sys: &KappaSystem, _cfg: &ReductionConfig, notes: &mut Vec<String>) -> Option<(KappaSystem, ReductionStep)> {
        'candidates: for sp in rule_species(sys) {
            let roles: Vec<Role> = sys.rules.iter().map(|r| classify_species(r, &sp)).collect();
            if !roles.iter().all(|r| matches!(r, Role::Modifier | Role::Absent)) || !roles.contains(&Role::Modifier) {
                continue;
            }
            if sys.observables.iter().any(|o| o.depends_on(&sp)) {
                continue;
            }
            if touched_by_partial(sys, &sp) {
                notes.push(format!("me: {sp} is matched by a partial pattern; kept"));
                continue;
            }
            let n0 = sys.initial_count(&sp);
            let sym = automorphisms(sp.graph()) as f64;
            let mut step = ReductionStep::new(StepKind::Me);
            let mut rules = Vec::with_capacity(sys.rules.len());
            for (r, role) in sys.rules.iter().zip(&roles) {
                let mut out = if *role == Role::Modifier {
                    let Some((mut stripped, m)) = strip(r, sys, &sp) else {
                        notes.push(format!("me: occurrences of {sp} in rule `{}` are not preserved agent-wise", r.name));
                        continue 'candidates;
                    };
                    if let RateLaw::MassAction(k) = r.rate {
                        stripped.rate = RateLaw::MassAction(k * sym.powi(m as i32) * binomial(n0 as f64, m));
                    }
                    stripped.origin = Origin::Reduction("me".into());
                    step.removed_rules.push(r.name.clone());
                    stripped
                } else {
                    r.clone()
                };
                if let RateLaw::Closed(e) = &out.rate {
                    if e.species_refs().contains(sp.key()) {
                        out.rate = RateLaw::Closed(e.substitute_species(sp.key(), &Expr::Num(n0 as f64)).simplify());
                        if !step.removed_rules.contains(&r.name) {
                            step.removed_rules.push(r.name.clone());
                        }
                    }
                }
                if out.rate.is_zero() || is_noop(&out) {
                    step.justification.push(format!("rule `{}` can no longer change the state; dropped", out.name));
                    continue;
                }
                if step.removed_rules.contains(&out.name) {
                    step.added_rules.push(out.name.clone());
                }
                rules.push(out);
            }
            let mut next = sys.clone();
            next.rules = rules;
            next.init.remove(&sp);
            step.removed_species.push(sp.key().to_string());
            step.justification.push(format!("{sp} is a modifier or absent in every rule"));
            step.justification.push(format!("{sp} is not observed"));
            step.justification.push(format!("{sp} has constant count {n0}"));
            return Some((next, step));
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::parse_model;

    fn once(text: &str) -> Option<KappaSystem> {
        let sys = parse_model(text).unwrap();
        ModifierElimination
            .apply(&sys, &ReductionConfig::default(), &mut Vec::new())
            .map(|(s, _)| s)
    }

    const SIG: &str = "%agent: E(s)\n%agent: S(e)\n%agent: P()\n";

    #[test]
    fn folds_initial_count_into_rate() {
        let sys = once(&format!("{SIG}%init: 5 E(s)\n%init: 10 S(e)\nr: E(s),S(e) -> E(s),P() @ 2\n")).unwrap();
        assert_eq!(sys.rules.len(), 1);
        assert_eq!(sys.rules[0].rate, RateLaw::MassAction(10.0));
        assert_eq!(sys.rules[0].lhs.len(), 1);
        assert_eq!(sys.init.len(), 1);
    }

    #[test]
    fn zero_copies_kill_the_rule() {
        let sys = once(&format!("{SIG}%init: 10 S(e)\nr: E(s),S(e) -> E(s),P() @ 2\n")).unwrap();
        assert!(sys.rules.is_empty());
    }

    #[test]
    fn observed_species_is_kept() {
        assert!(once(&format!("{SIG}%init: 5 E(s)\n%obs: e E(s)\nr: E(s),S(e) -> E(s),P() @ 2\n")).is_none());
    }

    #[test]
    fn double_occurrence_uses_binomial() {
        let sys = once(&format!("{SIG}%init: 5 E(s)\nr: E(s),E(s),S(e) -> E(s),E(s),P() @ 1\n")).unwrap();
        assert_eq!(sys.rules[0].rate, RateLaw::MassAction(10.0));
    }

    #[test]
    fn closed_law_gets_count_substituted() {
        let sys = once(&format!("{SIG}%init: 4 E(s)\nr: E(s),S(e) -> E(s),P() @@ 2 * #{{E(s)}} * #{{S(e)}}\n")).unwrap();
        let RateLaw::Closed(e) = &sys.rules[0].rate else { panic!() };
        assert_eq!(e.to_string(), "8 * #{S(e)}");
    }

    #[test]
    fn partial_pattern_blocks() {
        assert!(once(&format!("{SIG}%init: 5 E(s)\nr: E(s),S(e) -> E(s),P() @ 2\nd: E() -> E() @ 1\n")).is_none());
    }
}
