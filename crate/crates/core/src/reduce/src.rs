//! Similar rule composition.

use std::collections::BTreeMap;

use super::util::{propensity_expr, species_var};
use super::{ReductionConfig, ReductionPass, ReductionStep, StepKind};
use crate::kappa::canon::{agent_color, canonical_labeling, ColoredGraph};
use crate::kappa::graph::Link;
use crate::semantics::{Expr, KappaSystem, Origin, RateLaw, Rule};

/// Canonical key of a rule's two sides together with the agent alignment.
/// Equal keys mean the rules rewrite the same patterns the same way.
pub fn rule_key(r: &Rule) -> String {
    let mut lcol = vec![0; r.lhs.len()];
    let mut rcol = vec![0; r.rhs.len()];
    let mut colors = Vec::with_capacity(r.columns.len());
    for (ci, &(l, x)) in r.columns.iter().enumerate() {
        let lc = l.map_or_else(|| ".".to_string(), |l| agent_color(&r.lhs.agents[l]));
        let rc = x.map_or_else(|| ".".to_string(), |x| agent_color(&r.rhs.agents[x]));
        colors.push(format!("{lc}|{rc}"));
        if let Some(l) = l {
            lcol[l] = ci;
        }
        if let Some(x) = x {
            rcol[x] = ci;
        }
    }
    let mut edges = Vec::new();
    for (layer, g, cols) in [(0u8, &r.lhs, &lcol), (1u8, &r.rhs, &rcol)] {
        for (ai, a) in g.agents.iter().enumerate() {
            for (si, s) in a.sites.iter().enumerate() {
                if let Link::Bound(b, bs) = s.link {
                    if (ai, si) < (b, bs) {
                        edges.push((cols[ai], s.name.clone(), cols[b], g.agents[b].sites[bs].name.clone(), layer));
                    }
                }
            }
        }
    }
    canonical_labeling(&ColoredGraph { colors, edges }).1
}

pub struct SimilarRuleComposition;

impl ReductionPass for SimilarRuleComposition {
    fn name(&self) -> &'static str {
        "src"
    }

    fn apply(&self, sys: &KappaSystem, _cfg: &ReductionConfig, notes: &mut Vec<String>) -> Option<(KappaSystem, ReductionStep)> {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut order = Vec::new();
        for (i, r) in sys.rules.iter().enumerate() {
            let k = rule_key(r);
            let g = groups.entry(k.clone()).or_default();
            if g.is_empty() {
                order.push(k);
            }
            g.push(i);
        }
        for k in order {
            let members = &groups[&k];
            if members.len() < 2 {
                continue;
            }
            let rules: Vec<&Rule> = members.iter().map(|&i| &sys.rules[i]).collect();
            let rate = if rules.iter().all(|r| matches!(r.rate, RateLaw::MassAction(_))) {
                RateLaw::MassAction(
                    rules
                        .iter()
                        .map(|r| match r.rate {
                            RateLaw::MassAction(k) => k,
                            RateLaw::Closed(_) => unreachable!(),
                        })
                        .sum(),
                )
            } else {
                let exprs: Option<Vec<Expr>> = rules.iter().map(|r| propensity_expr(r, sys, &species_var)).collect();
                match exprs {
                    Some(e) => RateLaw::Closed(Expr::sum(e).simplify()),
                    None => {
                        let names: Vec<&str> = rules.iter().map(|r| r.name.as_str()).collect();
                        notes.push(format!(
                            "src: rules {} have equal sides but mix rate-law kinds on partial patterns",
                            names.join(", ")
                        ));
                        continue;
                    }
                }
            };
            let first = members[0];
            let mut merged = sys.rules[first].clone();
            merged.rate = rate;
            merged.origin = Origin::Reduction("src".into());
            let mut next = sys.clone();
            next.rules = sys
                .rules
                .iter()
                .enumerate()
                .filter_map(|(i, r)| {
                    if i == first {
                        Some(merged.clone())
                    } else if members.contains(&i) {
                        None
                    } else {
                        Some(r.clone())
                    }
                })
                .collect();
            let mut step = ReductionStep::new(StepKind::Src);
            step.removed_rules = rules.iter().map(|r| r.name.clone()).collect();
            step.added_rules = vec![merged.name.clone()];
            step.justification.push(format!("{} rules with structurally equal sides; rates summed", rules.len()));
            return Some((next, step));
        }
        None
    }
}
