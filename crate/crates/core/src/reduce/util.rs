//! Rule surgery shared by the passes.

use std::collections::{BTreeMap, BTreeSet};

use crate::kappa::graph::SiteGraph;
use crate::kappa::{automorphisms, embeddings, Species};
use crate::semantics::{Expr, KappaSystem, RateLaw, Rule, SideComponent};

/// Species components of one side, or `None` if some component is a
/// partial pattern.
pub(crate) fn species_components(comps: &[SideComponent]) -> Option<Vec<Species>> {
    comps.iter().map(|c| c.species.clone()).collect()
}

pub(crate) fn multiset(sps: &[Species]) -> BTreeMap<Species, u32> {
    let mut m = BTreeMap::new();
    for s in sps {
        *m.entry(s.clone()).or_default() += 1;
    }
    m
}

/// True when a partial pattern on either side of any rule embeds into
/// `sp`: such rules act on `sp` without being visible to whole-species
/// occurrence counts.
pub(crate) fn touched_by_partial(sys: &KappaSystem, sp: &Species) -> bool {
    sys.rules.iter().any(|r| {
        r.lhs_components(&sys.signature)
            .into_iter()
            .chain(r.rhs_components(&sys.signature))
            .any(|c| c.species.is_none() && !embeddings(&c.graph, sp.graph()).is_empty())
    })
}

/// Mass-action constant of the reactions generated from a rule whose
/// left-hand side consists of species.
pub(crate) fn effective_rate(r: &Rule, k: f64, sys: &KappaSystem) -> f64 {
    let comps = r.lhs_components(&sys.signature);
    comps.iter().map(|c| automorphisms(&c.graph) as f64).product::<f64>() * k
}

/// Full propensity of a rule as a closed expression in species counts, with
/// `var` supplying the count expression for each species.
pub(crate) fn propensity_expr(r: &Rule, sys: &KappaSystem, var: &dyn Fn(&Species) -> Expr) -> Option<Expr> {
    match &r.rate {
        RateLaw::Closed(e) => Some(e.clone()),
        RateLaw::MassAction(k) => {
            let comps = r.lhs_components(&sys.signature);
            let sps = species_components(&comps)?;
            let sym: f64 = comps.iter().map(|c| automorphisms(&c.graph) as f64).product();
            let factors = multiset(&sps).into_iter().map(|(sp, a)| Expr::binomial(var(&sp), a));
            Some(Expr::product(std::iter::once(Expr::Num(k * sym)).chain(factors)).simplify())
        }
    }
}

pub(crate) fn species_var(sp: &Species) -> Expr {
    Expr::species(sp.key())
}

/// Removes agents from both sides and appends new parts. `pairs` links
/// agents of `add_lhs` to agents of `add_rhs` (indices into the
/// concatenations) as preserved; other added agents are deleted or created.
/// A column that loses one of its agents turns into a creation or deletion.
pub(crate) fn rebuild(
    r: &Rule,
    drop_lhs: &BTreeSet<usize>,
    drop_rhs: &BTreeSet<usize>,
    add_lhs: &[SiteGraph],
    add_rhs: &[SiteGraph],
    pairs: &[(usize, usize)],
) -> Rule {
    let keep_l: Vec<usize> = (0..r.lhs.len()).filter(|i| !drop_lhs.contains(i)).collect();
    let keep_r: Vec<usize> = (0..r.rhs.len()).filter(|i| !drop_rhs.contains(i)).collect();
    let mut lmap = vec![usize::MAX; r.lhs.len()];
    for (n, &o) in keep_l.iter().enumerate() {
        lmap[o] = n;
    }
    let mut rmap = vec![usize::MAX; r.rhs.len()];
    for (n, &o) in keep_r.iter().enumerate() {
        rmap[o] = n;
    }
    let lbase = r.lhs.subgraph(&keep_l);
    let rbase = r.rhs.subgraph(&keep_r);
    let (nl, nr) = (lbase.len(), rbase.len());
    let lhs = SiteGraph::disjoint_union(std::iter::once(&lbase).chain(add_lhs));
    let rhs = SiteGraph::disjoint_union(std::iter::once(&rbase).chain(add_rhs));
    let mut columns = Vec::new();
    for &(l, x) in &r.columns {
        let l = l.filter(|&l| lmap[l] != usize::MAX).map(|l| lmap[l]);
        let x = x.filter(|&x| rmap[x] != usize::MAX).map(|x| rmap[x]);
        if l.is_some() || x.is_some() {
            columns.push((l, x));
        }
    }
    let added_l = lhs.len() - nl;
    let added_r = rhs.len() - nr;
    let mut paired_l = vec![false; added_l];
    let mut paired_r = vec![false; added_r];
    for &(i, j) in pairs {
        paired_l[i] = true;
        paired_r[j] = true;
        columns.push((Some(nl + i), Some(nr + j)));
    }
    for i in (0..added_l).filter(|&i| !paired_l[i]) {
        columns.push((Some(nl + i), None));
    }
    for j in (0..added_r).filter(|&j| !paired_r[j]) {
        columns.push((None, Some(nr + j)));
    }
    Rule {
        name: r.name.clone(),
        lhs,
        rhs,
        columns,
        rate: r.rate.clone(),
        origin: r.origin.clone(),
    }
}

/// A rule whose application changes nothing.
pub(crate) fn is_noop(r: &Rule) -> bool {
    r.lhs.is_empty() && r.rhs.is_empty()
        || r.columns.iter().all(|&(l, x)| match (l, x) {
            (Some(l), Some(x)) => {
                let (a, b) = (&r.lhs.agents[l], &r.rhs.agents[x]);
                a.sites.iter().zip(&b.sites).all(|(s, t)| {
                    s.internal == t.internal
                        && match (s.link, t.link) {
                            (crate::kappa::Link::Bound(p, ps), crate::kappa::Link::Bound(q, qs)) => {
                                let pc = r.columns.iter().position(|c| c.0 == Some(p));
                                let qc = r.columns.iter().position(|c| c.1 == Some(q));
                                pc == qc && r.lhs.agents[p].sites[ps].name == r.rhs.agents[q].sites[qs].name
                            }
                            (u, v) => u == v,
                        }
                })
            }
            _ => false,
        })
}

/// Species appearing as whole components anywhere in the rules, in order of
/// first appearance.
pub(crate) fn rule_species(sys: &KappaSystem) -> Vec<Species> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in &sys.rules {
        for c in r.lhs_components(&sys.signature).into_iter().chain(r.rhs_components(&sys.signature)) {
            if let Some(sp) = c.species {
                if seen.insert(sp.clone()) {
                    out.push(sp);
                }
            }
        }
    }
    out
}

/// Agents of the components on one side equal to `sp`.
pub(crate) fn occurrences(comps: &[SideComponent], sp: &Species) -> Vec<Vec<usize>> {
    comps
        .iter()
        .filter(|c| c.species.as_ref() == Some(sp))
        .map(|c| c.agents.clone())
        .collect()
}

/// Pairs each species with the first unused equal one on the other side.
pub(crate) fn pair_identical(lhs: &[Species], rhs: &[Species]) -> Vec<(usize, usize)> {
    let mut used = vec![false; rhs.len()];
    let mut out = Vec::new();
    for (i, s) in lhs.iter().enumerate() {
        if let Some(j) = (0..rhs.len()).find(|&j| !used[j] && rhs[j] == *s) {
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// A rule between whole species. Paired components keep their agents; the
/// rest are deleted or created.
pub(crate) fn species_rule(name: String, lhs: &[Species], rhs: &[Species], pairs: &[(usize, usize)], rate: RateLaw) -> Rule {
    let offsets = |side: &[Species]| {
        let mut acc = 0;
        side.iter()
            .map(|s| {
                let o = acc;
                acc += s.graph().len();
                o
            })
            .collect::<Vec<_>>()
    };
    let (lo, ro) = (offsets(lhs), offsets(rhs));
    let mut columns = Vec::new();
    let mut lpaired = vec![false; lhs.len()];
    let mut rpaired = vec![false; rhs.len()];
    for &(i, j) in pairs {
        lpaired[i] = true;
        rpaired[j] = true;
        for a in 0..lhs[i].graph().len() {
            columns.push((Some(lo[i] + a), Some(ro[j] + a)));
        }
    }
    for i in (0..lhs.len()).filter(|&i| !lpaired[i]) {
        columns.extend((0..lhs[i].graph().len()).map(|a| (Some(lo[i] + a), None)));
    }
    for j in (0..rhs.len()).filter(|&j| !rpaired[j]) {
        columns.extend((0..rhs[j].graph().len()).map(|a| (None, Some(ro[j] + a))));
    }
    Rule {
        name,
        lhs: SiteGraph::disjoint_union(lhs.iter().map(Species::graph)),
        rhs: SiteGraph::disjoint_union(rhs.iter().map(Species::graph)),
        columns,
        rate,
        origin: crate::semantics::Origin::User,
    }
}

/// Multiset difference `a - b`, keeping the order of `a`. `None` when `b`
/// is not contained in `a`.
pub(crate) fn remove_all(a: &[Species], b: &[Species]) -> Option<Vec<Species>> {
    let mut out = a.to_vec();
    for s in b {
        let i = out.iter().position(|x| x == s)?;
        out.remove(i);
    }
    Some(out)
}

/// Every column keeps its agent.
pub(crate) fn all_preserved(r: &Rule) -> bool {
    r.columns.iter().all(|c| c.0.is_some() && c.1.is_some())
}
