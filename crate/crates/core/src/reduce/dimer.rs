//! Fast dimerization.
//!
//! A fast equilibrium `M + M <-> M2` conserves `M_T = x_M + 2 x_M2`. The
//! pair is replaced by a pooled agent holding `M_T`, and every other rule
//! reads the monomer and dimer counts from the quasi-equilibrium partition
//! `K x_M^2 = x_M2`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::enzymatic::enzymatic_species;
use super::util::{
    all_preserved, effective_rate, is_noop, occurrences, propensity_expr, rebuild, species_components, species_var,
    touched_by_partial,
};
use super::{ReductionConfig, ReductionPass, ReductionStep, StepKind};
use crate::kappa::graph::{GAgent, SiteGraph};
use crate::kappa::{canonicalize_species, AgentDecl, Species};
use crate::semantics::{classify_species, Expr, KappaSystem, Observable, ObservableKind, Origin, RateLaw, Role};

/// Monomer and dimer amounts at equilibrium for total `mt` and
/// dissociation-free constant `k`, the root of `2k x^2 + x - mt = 0`.
pub fn dimer_partition(mt: f64, k: f64) -> (f64, f64) {
    if mt == 0.0 {
        return (0.0, 0.0);
    }
    // Rationalized root, stable for small `k * mt`.
    let xm = 2.0 * mt / ((8.0 * k * mt + 1.0).sqrt() + 1.0);
    (xm, (mt - xm) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimerCandidate {
    pub monomer: Species,
    pub dimer: Species,
    pub forward: String,
    pub reverse: String,
    /// Reaction constants of the expanded forward and reverse reactions.
    pub k_forward: f64,
    pub k_reverse: f64,
}

impl DimerCandidate {
    /// Equilibrium constant `x_M2 / x_M^2` in copy numbers.
    pub fn equilibrium(&self) -> f64 {
        self.k_forward / (2.0 * self.k_reverse)
    }
}

fn structural(sys: &KappaSystem) -> Vec<DimerCandidate> {
    let sides: Vec<_> = sys
        .rules
        .iter()
        .map(|r| {
            let RateLaw::MassAction(k) = r.rate else { return None };
            if !all_preserved(r) {
                return None;
            }
            let l = species_components(&r.lhs_components(&sys.signature))?;
            let x = species_components(&r.rhs_components(&sys.signature))?;
            Some((k, l, x))
        })
        .collect();
    let mut out = Vec::new();
    for (fi, f) in sides.iter().enumerate() {
        let Some((kf, l, x)) = f else { continue };
        if l.len() != 2 || l[0] != l[1] || x.len() != 1 {
            continue;
        }
        let (m, m2) = (&l[0], &x[0]);
        let rev = sides.iter().position(|s| {
            matches!(s, Some((_, l2, x2)) if l2.len() == 1 && l2[0] == *m2 && x2.len() == 2 && x2[0] == *m && x2[1] == *m)
        });
        let Some(ri) = rev else { continue };
        let kr = sides[ri].as_ref().unwrap().0;
        out.push(DimerCandidate {
            monomer: m.clone(),
            dimer: m2.clone(),
            forward: sys.rules[fi].name.clone(),
            reverse: sys.rules[ri].name.clone(),
            k_forward: effective_rate(&sys.rules[fi], *kf, sys),
            k_reverse: effective_rate(&sys.rules[ri], kr, sys),
        });
    }
    out
}

fn check(sys: &KappaSystem, c: &DimerCandidate) -> Result<(), String> {
    let (m, m2) = (&c.monomer, &c.dimer);
    for r in sys.rules.iter().filter(|r| r.name != c.forward && r.name != c.reverse) {
        match classify_species(r, m2) {
            Role::Modifier | Role::Absent => {}
            _ => return Err(format!("dimer {m2} is produced or consumed by rule `{}`", r.name)),
        }
        match classify_species(r, m) {
            Role::Reactant | Role::Product | Role::Absent => {}
            _ => return Err(format!("monomer {m} is a modifier in rule `{}`", r.name)),
        }
        let touches = classify_species(r, m) != Role::Absent || classify_species(r, m2) != Role::Absent;
        if touches && species_components(&r.lhs_components(&sys.signature)).is_none() {
            return Err(format!("rule `{}` uses {m} or {m2} next to a partial pattern", r.name));
        }
    }
    for sp in [m, m2] {
        if touched_by_partial(sys, sp) {
            return Err(format!("{sp} is matched by a partial pattern"));
        }
    }
    let enz = enzymatic_species(sys);
    if enz.contains(m) || enz.contains(m2) {
        return Err(format!("{m} takes part in an enzymatic pattern"));
    }
    Ok(())
}

/// Dimerization pairs passing every side condition.
pub fn detect_dimerization(sys: &KappaSystem) -> Vec<DimerCandidate> {
    structural(sys).into_iter().filter(|c| check(sys, c).is_ok()).collect()
}

fn rewrite(sys: &KappaSystem, c: &DimerCandidate) -> (KappaSystem, ReductionStep) {
    let mut step = ReductionStep::new(StepKind::FastDimer);
    let mut next = sys.clone();
    let base = c.monomer.graph().agents[0].name.clone();
    let pool = next.fresh_agent(&format!("{base}T"));
    next.signature
        .insert(pool.clone(), AgentDecl::default())
        .expect("fresh agent name");
    let unit = SiteGraph { agents: vec![GAgent { name: pool.clone(), sites: vec![] }] };
    let pooled = canonicalize_species(&unit, &next.signature).expect("site-less agent is a species");
    let kname = next.fresh_constant(&format!("K_{base}"));
    let k = c.equilibrium();
    let mt0 = sys.initial_count(&c.monomer) + 2 * sys.initial_count(&c.dimer);

    let mt = Expr::species(pooled.key());
    let kc = Expr::constant(&kname);
    // 2 MT / (sqrt(8 K MT + 1) + 1), written as in `dimer_partition`.
    let xm = (Expr::num(2.0) * mt.clone()) / ((Expr::num(8.0) * kc * mt.clone() + Expr::num(1.0)).sqrt() + Expr::num(1.0));
    let xm2 = (mt - xm.clone()) / Expr::num(2.0);
    let var = |sp: &Species| {
        if *sp == c.monomer {
            xm.clone()
        } else if *sp == c.dimer {
            xm2.clone()
        } else {
            species_var(sp)
        }
    };
    let subst = |e: &Expr| {
        e.substitute_species(c.monomer.key(), &xm)
            .substitute_species(c.dimer.key(), &xm2)
    };

    let mut rules = Vec::with_capacity(sys.rules.len());
    for r in &sys.rules {
        if r.name == c.forward || r.name == c.reverse {
            step.removed_rules.push(r.name.clone());
            continue;
        }
        let touches = [&c.monomer, &c.dimer].iter().any(|sp| classify_species(r, sp) != Role::Absent);
        let reads = matches!(&r.rate, RateLaw::Closed(e)
            if e.species_refs().iter().any(|k| k == c.monomer.key() || k == c.dimer.key()));
        if !touches && !reads {
            rules.push(r.clone());
            continue;
        }
        let mut out = r.clone();
        if touches {
            let lc = r.lhs_components(&sys.signature);
            let rc = r.rhs_components(&sys.signature);
            let mut drop_l = BTreeSet::new();
            let mut drop_r = BTreeSet::new();
            let (mut nl, mut nr) = (0, 0);
            for (sp, w) in [(&c.monomer, 1), (&c.dimer, 2)] {
                for o in occurrences(&lc, sp) {
                    drop_l.extend(o);
                    nl += w;
                }
                for o in occurrences(&rc, sp) {
                    drop_r.extend(o);
                    nr += w;
                }
            }
            let add_l = vec![unit.clone(); nl];
            let add_r = vec![unit.clone(); nr];
            let pairs: Vec<(usize, usize)> = (0..nl.min(nr)).map(|i| (i, i)).collect();
            out = rebuild(r, &drop_l, &drop_r, &add_l, &add_r, &pairs);
        }
        let law = match &r.rate {
            RateLaw::Closed(e) => subst(e),
            RateLaw::MassAction(_) => propensity_expr(r, sys, &var).expect("checked: species-only left-hand side"),
        };
        out.rate = RateLaw::Closed(law.simplify());
        out.origin = Origin::Reduction("dimer".into());
        step.removed_rules.push(r.name.clone());
        if out.rate.is_zero() || is_noop(&out) {
            continue;
        }
        step.added_rules.push(out.name.clone());
        rules.push(out);
    }
    next.rules = rules;

    let mut observables = Vec::with_capacity(sys.observables.len());
    for o in &sys.observables {
        if !(o.depends_on(&c.monomer) || o.depends_on(&c.dimer)) {
            observables.push(o.clone());
            continue;
        }
        let body = match &o.kind {
            ObservableKind::Pattern(p) => Expr::Count(p.clone()),
            ObservableKind::Closed(e) => subst(e),
        };
        observables.push(Observable { name: o.name.clone(), kind: ObservableKind::Closed(body) });
    }
    next.observables = observables;

    next.init.remove(&c.monomer);
    next.init.remove(&c.dimer);
    if mt0 > 0 {
        next.init.insert(pooled.clone(), mt0);
    }
    // Pattern counts no longer see M and M2; add their pooled share back.
    let mut in_use: BTreeSet<&str> = next.rules.iter().flat_map(|r| r.agent_names()).collect();
    in_use.extend(next.init.keys().flat_map(|sp| sp.graph().agent_names()));
    for o in &mut next.observables {
        let ObservableKind::Closed(e) = &o.kind else { continue };
        let e = e.map_leaves(&mut |leaf| {
            let Expr::Count(p) = leaf else { return None };
            let wm = crate::semantics::pattern_weight(p, &c.monomer);
            let wm2 = crate::semantics::pattern_weight(p, &c.dimer);
            if wm == 0.0 && wm2 == 0.0 {
                return None;
            }
            let mut terms = Vec::new();
            if p.agent_names().all(|n| in_use.contains(n)) {
                terms.push(leaf.clone());
            }
            if wm > 0.0 {
                terms.push(Expr::num(wm) * xm.clone());
            }
            if wm2 > 0.0 {
                terms.push(Expr::num(wm2) * xm2.clone());
            }
            Some(Expr::sum(terms))
        });
        o.kind = ObservableKind::Closed(e.simplify());
    }

    next.constants.insert(kname.clone(), k);
    step.introduced_constants.insert(kname, k);
    let mt_name = format!("{pool}_0");
    step.introduced_constants.insert(mt_name, mt0 as f64);
    step.removed_species = vec![c.monomer.key().to_string(), c.dimer.key().to_string()];
    step.justification.push(format!("dimer {} is produced only by `{}`", c.dimer, c.forward));
    step.justification.push(format!("monomer {} is never a modifier elsewhere", c.monomer));
    step.justification.push(format!("pooled into {pooled} with {mt0} initial units"));
    (next, step)
}

pub struct FastDimerization;

impl ReductionPass for FastDimerization {
    fn name(&self) -> &'static str {
        "dimer"
    }

    fn apply(&self, sys: &KappaSystem, _cfg: &ReductionConfig, notes: &mut Vec<String>) -> Option<(KappaSystem, ReductionStep)> {
        for c in structural(sys) {
            match check(sys, &c) {
                Ok(()) => return Some(rewrite(sys, &c)),
                Err(why) => notes.push(format!("dimer: {why}")),
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::parse_model;

    #[test]
    fn partition_examples() {
        assert_eq!(dimer_partition(0.0, 3.0), (0.0, 0.0));
        let (xm, xm2) = dimer_partition(1.0, 1.0);
        assert!((xm - 0.5).abs() < 1e-15);
        assert!((xm2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn partition_identities_on_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let k = 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0);
                let mt = 10f64.powf(6.0 * j as f64 / 9.0);
                let (xm, xm2) = dimer_partition(mt, k);
                assert!((xm + 2.0 * xm2 - mt).abs() <= 1e-12 * mt.max(1.0));
                assert!((k * xm * xm - xm2).abs() <= 1e-12 * mt.max(1.0));
            }
        }
    }

    const TOY: &str = "%agent: M(b)\n%agent: P()\n%init: 100 M(b)\n\
        d: M(b),M(b) <-> M(b!1),M(b!1) @ 4, 1\n";

    #[test]
    fn detects_the_pair() {
        let sys = parse_model(TOY).unwrap();
        let c = detect_dimerization(&sys);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].forward, "d_fwd");
        // Forward propensity 4 C(x,2), reverse 2 y: 2 x^2 = 2 y at equilibrium.
        assert_eq!(c[0].equilibrium(), 1.0);
    }

    #[test]
    fn dimer_made_elsewhere_is_rejected() {
        let sys = parse_model(&format!("{TOY}mk: P() -> M(b!1),M(b!1) @ 1\n")).unwrap();
        assert!(detect_dimerization(&sys).is_empty());
    }

    #[test]
    fn heterodimer_is_not_matched() {
        let sys = parse_model("%agent: A(b)\n%agent: B(a)\nr: A(b),B(a) <-> A(b!1),B(a!1) @ 1, 1\n").unwrap();
        assert!(detect_dimerization(&sys).is_empty());
    }

    #[test]
    fn isolated_pair_is_pooled() {
        let sys = parse_model(&format!("{TOY}%init: 5 M(b!1),M(b!1)\n")).unwrap();
        let (red, step) = FastDimerization.apply(&sys, &ReductionConfig::default(), &mut Vec::new()).unwrap();
        assert!(red.rules.is_empty());
        assert_eq!(red.init.values().copied().collect::<Vec<_>>(), vec![110]);
        assert_eq!(step.introduced_constants["K_M"], 1.0);
    }

    #[test]
    fn other_rules_read_the_partition() {
        let sys = parse_model(&format!("{TOY}%obs: m M(b)\np: M(b!1),M(b!1) -> M(b!1),M(b!1),P() @ 3\n")).unwrap();
        let (red, _) = FastDimerization.apply(&sys, &ReductionConfig::default(), &mut Vec::new()).unwrap();
        assert_eq!(red.rules.len(), 1);
        let RateLaw::Closed(e) = &red.rules[0].rate else { panic!() };
        let consts = |n: &str| red.constants.get(n).copied();
        let got = e.eval_with(&consts, &|_| 100.0, &|_| 0.0).unwrap();
        // Reverse of the dimer pattern into itself gives two embeddings.
        let (_, xm2) = dimer_partition(100.0, 1.0);
        assert!((got - 6.0 * xm2).abs() < 1e-9);
        let ObservableKind::Closed(o) = &red.observables[0].kind else { panic!() };
        let (xm, _) = dimer_partition(100.0, 1.0);
        assert!((o.eval_with(&consts, &|_| 100.0, &|_| 0.0).unwrap() - xm).abs() < 1e-9);
        assert_eq!(red.rules[0].lhs.len(), 2);
    }
}
