//! Expansion of a rule set into a finite reaction network.
//!
//! Starting from the species of the initial mixture, every rule is applied
//! to every combination of known species that admits an embedding of its
//! left-hand side, one species per connected component. Products that are
//! new join the table and the process repeats until nothing new appears.
//!
//! A mass-action rule with rate `k` yields reactions with constant
//! `k * eps / prod(a_i!)`, where `eps` counts the embeddings of the
//! left-hand side into one copy of each consumed species that produce the
//! same outcome. A closed rule contributes its expression as the whole
//! propensity, split across outcomes in proportion to `eps`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::expr::{Compiled, ExprError};
use super::rule::{RateLaw, Rule};
use super::system::{pattern_weight, KappaSystem, ObservableKind};
use crate::kappa::graph::{GAgent, GSite, Link, SiteGraph};
use crate::kappa::{embeddings, Species};

pub const DEFAULT_MAX_SPECIES: usize = 1000;
pub const DEFAULT_MAX_REACTIONS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    Species,
    Reactions,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpandError {
    #[error("network exceeds the {which:?} cap of {limit}; the expansion may be infinite")]
    CapExceeded { which: Cap, limit: usize },
    #[error("rule `{0}` has a closed rate law but a left-hand side component that is not a species")]
    ClosedNeedsSpecies(String),
    #[error("rule `{rule}`: {source}")]
    Expr { rule: String, source: ExprError },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetRate {
    MassAction(f64),
    /// Propensity `scale * expr(x)`.
    Closed { expr: Compiled, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// Sparse `(species, count)`, sorted by species.
    pub consume: Vec<(usize, u32)>,
    pub produce: Vec<(usize, u32)>,
    pub rate: NetRate,
    pub source_rule: String,
}

impl Reaction {
    /// `produce - consume`, sparse and without zero entries.
    pub fn stoich(&self) -> Vec<(usize, i64)> {
        let mut m: BTreeMap<usize, i64> = BTreeMap::new();
        for &(i, a) in &self.consume {
            *m.entry(i).or_default() -= i64::from(a);
        }
        for &(i, a) in &self.produce {
            *m.entry(i).or_default() += i64::from(a);
        }
        m.into_iter().filter(|&(_, v)| v != 0).collect()
    }

    pub fn order(&self) -> u32 {
        self.consume.iter().map(|&(_, a)| a).sum()
    }

    pub fn consume_dense(&self, n: usize) -> Vec<u32> {
        dense(&self.consume, n)
    }

    pub fn produce_dense(&self, n: usize) -> Vec<u32> {
        dense(&self.produce, n)
    }

    /// Species whose values the propensity reads.
    pub fn dependencies(&self) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self.consume.iter().map(|&(i, _)| i).collect();
        if let NetRate::Closed { expr, .. } = &self.rate {
            expr.dependencies(&mut out);
        }
        out
    }
}

fn dense(v: &[(usize, u32)], n: usize) -> Vec<u32> {
    let mut out = vec![0; n];
    for &(i, a) in v {
        out[i] = a;
    }
    out
}

/// `C(x, a)` on a real-valued count.
pub fn binomial(x: f64, a: u32) -> f64 {
    let mut acc = 1.0;
    for t in 0..a {
        let f = x - f64::from(t);
        if f <= 0.0 {
            return 0.0;
        }
        acc *= f / f64::from(t + 1);
    }
    acc
}

/// Mass action: `k * prod C(x_i, a_i)`. Closed: the expression value,
/// forced to zero where firing would drive a count negative.
pub fn propensity(rx: &Reaction, x: &[f64]) -> f64 {
    match &rx.rate {
        NetRate::MassAction(k) => {
            if *k == 0.0 {
                return 0.0;
            }
            rx.consume.iter().fold(*k, |acc, &(i, a)| acc * binomial(x[i], a))
        }
        NetRate::Closed { expr, scale } => {
            if rx.stoich().iter().any(|&(i, d)| d < 0 && x[i] < -d as f64) {
                return 0.0;
            }
            scale * expr.eval(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetObservableKind {
    Linear(Vec<(usize, f64)>),
    Closed(Compiled),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetObservable {
    pub name: String,
    pub kind: NetObservableKind,
}

impl NetObservable {
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NetObservableKind::Linear(w) => w.iter().map(|&(i, c)| c * x[i]).sum(),
            NetObservableKind::Closed(e) => e.eval(x),
        }
    }

    /// Integer-valued on integer states.
    pub fn is_integral(&self) -> bool {
        match &self.kind {
            NetObservableKind::Linear(w) => w.iter().all(|&(_, c)| c.fract() == 0.0),
            NetObservableKind::Closed(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    pub init_state: Vec<u64>,
    pub observables: Vec<NetObservable>,
}

impl ReactionNetwork {
    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.species.iter().position(|s| s.key() == key)
    }

    pub fn init_f64(&self) -> Vec<f64> {
        self.init_state.iter().map(|&v| v as f64).collect()
    }

    pub fn propensities(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.reactions.iter().map(|r| propensity(r, x)));
    }

    /// Right-hand side of the deterministic limit on concentrations `z`.
    /// Mass-action constants become `k * V^(order - 1)`; closed laws are
    /// evaluated on `z` directly.
    pub fn ode_rhs(&self, z: &[f64], volume: f64) -> Vec<f64> {
        let mut dz = vec![0.0; z.len()];
        for rx in &self.reactions {
            let flux = match &rx.rate {
                NetRate::MassAction(k) => {
                    let c = k * volume.powi(rx.order() as i32 - 1);
                    rx.consume.iter().fold(c, |acc, &(i, a)| acc * z[i].powi(a as i32))
                }
                NetRate::Closed { expr, scale } => scale * expr.eval(z),
            };
            for (i, d) in rx.stoich() {
                dz[i] += d as f64 * flux;
            }
        }
        dz
    }

    pub fn observable(&self, name: &str) -> Option<&NetObservable> {
        self.observables.iter().find(|o| o.name == name)
    }
}

pub fn ode_rhs(net: &ReactionNetwork, z: &[f64], volume: f64) -> Vec<f64> {
    net.ode_rhs(z, volume)
}

struct Table {
    species: Vec<Species>,
    index: BTreeMap<String, usize>,
}

impl Table {
    fn get(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    fn push(&mut self, sp: Species) -> usize {
        let i = self.species.len();
        self.index.insert(sp.key().to_string(), i);
        self.species.push(sp);
        i
    }
}

/// Precomputed per-rule data.
struct Prepared<'r> {
    rule: &'r Rule,
    components: Vec<(Vec<usize>, SiteGraph)>,
}

/// A reaction before product species receive indices.
struct Pending {
    rule: usize,
    consume: Vec<(usize, u32)>,
    products: BTreeMap<Species, u32>,
    /// Embeddings over ordered species tuples; equals the embedding count
    /// into one copy of each consumed species divided by `prod(a_i!)`.
    eps: usize,
    eps_total: usize,
}

/// Applies `rule` to `mix` along `phi` (lhs agent to mixture agent) and
/// returns the resulting mixture.
fn apply(rule: &Rule, mix: &SiteGraph, phi: &[usize]) -> SiteGraph {
    let mut agents: Vec<GAgent> = mix.agents.clone();
    let mut alive = vec![true; agents.len()];
    let mut rhs_to_mix = vec![usize::MAX; rule.rhs.len()];
    for &(l, r) in &rule.columns {
        match (l, r) {
            (Some(l), Some(r)) => rhs_to_mix[r] = phi[l],
            (None, Some(r)) => {
                rhs_to_mix[r] = agents.len();
                let a = &rule.rhs.agents[r];
                agents.push(GAgent {
                    name: a.name.clone(),
                    sites: a
                        .sites
                        .iter()
                        .map(|s| GSite {
                            name: s.name.clone(),
                            internal: s.internal.clone(),
                            link: Link::Free,
                        })
                        .collect(),
                });
                alive.push(true);
            }
            (Some(l), None) => alive[phi[l]] = false,
            (None, None) => {}
        }
    }
    let site_of = |agents: &[GAgent], m: usize, name: &str| agents[m].site(name).expect("mixture agents carry full interfaces");
    let unbind = |agents: &mut Vec<GAgent>, m: usize, s: usize| {
        if let Link::Bound(pm, ps) = agents[m].sites[s].link {
            agents[pm].sites[ps].link = Link::Free;
        }
        agents[m].sites[s].link = Link::Free;
    };
    // Unbind every lhs site whose binding differs on the rhs, plus every
    // site of a deleted agent.
    for &(l, r) in &rule.columns {
        let Some(l) = l else { continue };
        let la = &rule.lhs.agents[l];
        let m = phi[l];
        for ls in &la.sites {
            let s = site_of(&agents, m, &ls.name);
            let keep = match r {
                None => false,
                Some(r) => {
                    let rs = &rule.rhs.agents[r].sites[rule.rhs.agents[r].site(&ls.name).expect("validated interface")];
                    match (ls.link, rs.link) {
                        (Link::Bound(pa, ps), Link::Bound(b, bs)) => {
                            phi[pa] == rhs_to_mix[b] && rule.lhs.agents[pa].sites[ps].name == rule.rhs.agents[b].sites[bs].name
                        }
                        (a, b) => a == b,
                    }
                }
            };
            if !keep && ls.link != Link::Free {
                unbind(&mut agents, m, s);
            }
        }
    }
    for (ri, ra) in rule.rhs.agents.iter().enumerate() {
        let m = rhs_to_mix[ri];
        for rs in &ra.sites {
            let s = site_of(&agents, m, &rs.name);
            if let Some(v) = &rs.internal {
                agents[m].sites[s].internal = Some(v.clone());
            }
            if let Link::Bound(b, bs) = rs.link {
                let pm = rhs_to_mix[b];
                let ps = site_of(&agents, pm, &rule.rhs.agents[b].sites[bs].name);
                agents[m].sites[s].link = Link::Bound(pm, ps);
                agents[pm].sites[ps].link = Link::Bound(m, s);
            }
        }
    }
    let keep: Vec<usize> = (0..agents.len()).filter(|&i| alive[i]).collect();
    SiteGraph { agents }.subgraph(&keep)
}

fn multiset(items: impl IntoIterator<Item = usize>) -> Vec<(usize, u32)> {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for i in items {
        *m.entry(i).or_default() += 1;
    }
    m.into_iter().collect()
}

/// Enumerates species tuples for one rule whose largest index is at least
/// `frontier`, returning grouped pending reactions. Rules without
/// reactants fire in the first round only.
fn enumerate_rule(ri: usize, prep: &Prepared<'_>, table: &Table, frontier: usize, first: bool, out: &mut Vec<Pending>) {
    let m = prep.components.len();
    let n = table.species.len();
    if m == 0 {
        if first {
            let product = apply(prep.rule, &SiteGraph::default(), &[]);
            let products = split(&product);
            out.push(Pending {
                rule: ri,
                consume: Vec::new(),
                products,
                eps: 1,
                eps_total: 1,
            });
        }
        return;
    }
    // Per component, the species it embeds into together with the embeddings.
    let cand: Vec<Vec<(usize, Vec<Vec<usize>>)>> = prep
        .components
        .iter()
        .map(|(_, g)| {
            (0..n)
                .filter_map(|s| {
                    let e = embeddings(g, table.species[s].graph());
                    (!e.is_empty()).then_some((s, e))
                })
                .collect()
        })
        .collect();
    if cand.iter().any(Vec::is_empty) {
        return;
    }
    // Group by consumed multiset, then by product multiset.
    let mut groups: BTreeMap<Vec<(usize, u32)>, BTreeMap<BTreeMap<Species, u32>, usize>> = BTreeMap::new();
    let mut pick = vec![0usize; m];
    loop {
        let tuple: Vec<usize> = (0..m).map(|j| cand[j][pick[j]].0).collect();
        if tuple.iter().copied().max().unwrap_or(0) >= frontier {
            let parts: Vec<&SiteGraph> = tuple.iter().map(|&s| table.species[s].graph()).collect();
            let mix = SiteGraph::disjoint_union(parts.iter().copied());
            let offsets: Vec<usize> = parts
                .iter()
                .scan(0, |acc, g| {
                    let o = *acc;
                    *acc += g.len();
                    Some(o)
                })
                .collect();
            let consume = multiset(tuple.iter().copied());
            let entry = groups.entry(consume).or_default();
            let mut sel = vec![0usize; m];
            loop {
                let mut phi = vec![0usize; prep.rule.lhs.len()];
                for j in 0..m {
                    let emb = &cand[j][pick[j]].1[sel[j]];
                    for (k, &agent) in prep.components[j].0.iter().enumerate() {
                        phi[agent] = emb[k] + offsets[j];
                    }
                }
                let result = apply(prep.rule, &mix, &phi);
                *entry.entry(split(&result)).or_default() += 1;
                if !advance(&mut sel, |j| cand[j][pick[j]].1.len()) {
                    break;
                }
            }
        }
        if !advance(&mut pick, |j| cand[j].len()) {
            break;
        }
    }
    for (consume, outcomes) in groups {
        let total: usize = outcomes.values().sum();
        for (products, eps) in outcomes {
            out.push(Pending {
                rule: ri,
                consume: consume.clone(),
                products,
                eps,
                eps_total: total,
            });
        }
    }
}

/// Odometer increment; false when it wraps around.
fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < len(j) {
            return true;
        }
        idx[j] = 0;
    }
    false
}

fn split(g: &SiteGraph) -> BTreeMap<Species, u32> {
    let mut out = BTreeMap::new();
    for c in g.components() {
        *out.entry(Species::from_graph_unchecked(&g.subgraph(&c))).or_default() += 1;
    }
    out
}

/// Expands `sys` into a reaction network, failing when either cap is
/// exceeded.
pub fn expand(sys: &KappaSystem, max_species: usize, max_reactions: usize) -> Result<ReactionNetwork, ExpandError> {
    let mut table = Table {
        species: Vec::new(),
        index: BTreeMap::new(),
    };
    for sp in sys.init.keys() {
        table.push(sp.clone());
    }
    if table.species.len() > max_species {
        return Err(ExpandError::CapExceeded { which: Cap::Species, limit: max_species });
    }
    let sig = &sys.signature;
    let prepared: Vec<Prepared<'_>> = sys
        .rules
        .iter()
        .map(|r| {
            let comps = r.lhs_components(sig);
            if matches!(r.rate, RateLaw::Closed(_)) && comps.iter().any(|c| c.species.is_none()) {
                return Err(ExpandError::ClosedNeedsSpecies(r.name.clone()));
            }
            Ok(Prepared {
                rule: r,
                components: comps.into_iter().map(|c| (c.agents, c.graph)).collect(),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut resolved: Vec<(Pending, Vec<(usize, u32)>)> = Vec::new();
    let mut frontier = 0;
    let mut first = true;
    loop {
        let mut pending = Vec::new();
        for (ri, p) in prepared.iter().enumerate() {
            enumerate_rule(ri, p, &table, frontier, first, &mut pending);
        }
        first = false;
        let fresh: BTreeSet<&Species> = pending
            .iter()
            .flat_map(|p| p.products.keys())
            .filter(|sp| table.get(sp.key()).is_none())
            .collect();
        let fresh: Vec<Species> = fresh.into_iter().cloned().collect();
        let next_frontier = table.species.len();
        for sp in fresh {
            table.push(sp);
            if table.species.len() > max_species {
                return Err(ExpandError::CapExceeded { which: Cap::Species, limit: max_species });
            }
        }
        for p in pending {
            let produce: Vec<(usize, u32)> = p.products.iter().map(|(sp, &c)| (table.get(sp.key()).unwrap(), c)).collect();
            if produce == p.consume {
                continue;
            }
            resolved.push((p, produce));
            if resolved.len() > max_reactions {
                return Err(ExpandError::CapExceeded { which: Cap::Reactions, limit: max_reactions });
            }
        }
        if table.species.len() == next_frontier {
            break;
        }
        frontier = next_frontier;
    }

    let consts = |c: &str| sys.constants.get(c).copied();
    let species_idx = |k: &str| table.get(k);
    let weights = |p: &SiteGraph| -> Vec<(usize, f64)> {
        table
            .species
            .iter()
            .enumerate()
            .filter_map(|(i, sp)| {
                let w = pattern_weight(p, sp);
                (w > 0.0).then_some((i, w))
            })
            .collect()
    };
    let mut compiled: BTreeMap<usize, Compiled> = BTreeMap::new();
    for (ri, p) in prepared.iter().enumerate() {
        if let RateLaw::Closed(e) = &p.rule.rate {
            let c = e.compile(&consts, &species_idx, &weights).map_err(|source| ExpandError::Expr {
                rule: p.rule.name.clone(),
                source,
            })?;
            compiled.insert(ri, c);
        }
    }
    let reactions = resolved
        .into_iter()
        .map(|(p, produce)| {
            let rule = prepared[p.rule].rule;
            let rate = match &rule.rate {
                RateLaw::MassAction(k) => NetRate::MassAction(k * p.eps as f64),
                RateLaw::Closed(_) => NetRate::Closed {
                    expr: compiled[&p.rule].clone(),
                    scale: p.eps as f64 / p.eps_total as f64,
                },
            };
            Reaction {
                consume: p.consume,
                produce,
                rate,
                source_rule: rule.name.clone(),
            }
        })
        .collect();

    let mut observables = Vec::with_capacity(sys.observables.len());
    for o in &sys.observables {
        let kind = match &o.kind {
            ObservableKind::Pattern(p) => NetObservableKind::Linear(weights(p)),
            ObservableKind::Closed(e) => NetObservableKind::Closed(e.compile(&consts, &species_idx, &weights).map_err(|source| {
                ExpandError::Expr {
                    rule: o.name.clone(),
                    source,
                }
            })?),
        };
        observables.push(NetObservable { name: o.name.clone(), kind });
    }
    let init_state = table.species.iter().map(|s| sys.initial_count(s)).collect();
    Ok(ReactionNetwork {
        species: table.species,
        reactions,
        init_state,
        observables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::{canonicalize_species, parse_expression};
    use crate::semantics::model::parse_model;

    const FIG1: &str = "\
%agent: T(op)
%agent: Op(tf)
%agent: P()
%init: 5 T(op)
%init: 1 Op(tf)
bind: T(op),Op(tf) <-> T(op!1),Op(tf!1) @ 1, 2
produce: T(op!1),Op(tf!1) -> T(op!1),Op(tf!1),P() @ 3
";

    fn key(sys: &KappaSystem, text: &str) -> String {
        let g = SiteGraph::from_expression(&parse_expression(text, &sys.signature).unwrap()).unwrap();
        canonicalize_species(&g, &sys.signature).unwrap().key().to_string()
    }

    #[test]
    fn transcription_factor_network() {
        let sys = parse_model(FIG1).unwrap();
        let net = expand(&sys, 100, 100).unwrap();
        assert_eq!(net.species.len(), 4);
        assert_eq!(net.reactions.len(), 3);
        for k in ["T(op)", "Op(tf)", "Op(tf!1),T(op!1)", "P()"] {
            assert!(net.index_of(&key(&sys, k)).is_some(), "{k}");
        }
        for rx in &net.reactions {
            assert!(matches!(rx.rate, NetRate::MassAction(_)));
        }
    }

    #[test]
    fn source_rule_fires_once_from_an_empty_mixture() {
        let sys = parse_model("%agent: P()\ns: . -> P() @@ 5\nd: P() -> . @ 1\n").unwrap();
        let net = expand(&sys, 10, 10).unwrap();
        assert_eq!(net.reactions.len(), 2);
        assert_eq!(net.reactions.iter().filter(|r| r.consume.is_empty()).count(), 1);
    }

    #[test]
    fn homodimerization_counts() {
        let sys = parse_model("%agent: M(b)\n%init: 10 M(b)\nd: M(b),M(b) -> M(b!1),M(b!1) @ 3\n").unwrap();
        let net = expand(&sys, 100, 100).unwrap();
        assert_eq!(net.species.len(), 2);
        assert_eq!(net.reactions.len(), 1);
        let rx = &net.reactions[0];
        assert_eq!(rx.consume, vec![(0, 2)]);
        assert_eq!(rx.rate, NetRate::MassAction(3.0));
        let x = net.init_f64();
        assert_eq!(propensity(rx, &x), 3.0 * 45.0);
    }

    #[test]
    fn polymerization_hits_cap() {
        let sys = parse_model("%agent: A(l,r)\n%init: 10 A(l,r)\np: A(r),A(l) -> A(r!1),A(l!1) @ 1\n").unwrap();
        assert!(matches!(
            expand(&sys, 20, 5000),
            Err(ExpandError::CapExceeded { which: Cap::Species, .. })
        ));
    }

    #[test]
    fn expansion_is_deterministic() {
        let sys = parse_model(FIG1).unwrap();
        assert_eq!(expand(&sys, 100, 100).unwrap(), expand(&sys, 100, 100).unwrap());
    }

    #[test]
    fn mass_action_propensity_examples() {
        let rx = Reaction {
            consume: vec![(0, 2)],
            produce: vec![(1, 1)],
            rate: NetRate::MassAction(3.0),
            source_rule: "r".into(),
        };
        assert_eq!(propensity(&rx, &[4.0, 0.0]), 18.0);
        assert_eq!(propensity(&rx, &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn ode_examples() {
        let unary = ReactionNetwork {
            species: vec![],
            reactions: vec![Reaction {
                consume: vec![(0, 1)],
                produce: vec![(1, 1)],
                rate: NetRate::MassAction(2.0),
                source_rule: "r".into(),
            }],
            init_state: vec![0, 0],
            observables: vec![],
        };
        assert_eq!(unary.ode_rhs(&[0.5, 0.0], 1.0), vec![-1.0, 1.0]);
        let binary = ReactionNetwork {
            reactions: vec![Reaction {
                consume: vec![(0, 2)],
                produce: vec![(1, 1)],
                rate: NetRate::MassAction(2.0),
                source_rule: "r".into(),
            }],
            ..unary.clone()
        };
        let dz = binary.ode_rhs(&[0.5, 0.0], 10.0);
        assert!((dz[1] - 2.0 * 10.0 * 0.25).abs() < 1e-12);
        assert!((dz[0] + 2.0 * 2.0 * 10.0 * 0.25).abs() < 1e-12);
        let empty = ReactionNetwork {
            reactions: vec![],
            ..unary
        };
        assert_eq!(empty.ode_rhs(&[1.0, 2.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn stoichiometry_is_consistent() {
        let sys = parse_model(FIG1).unwrap();
        let net = expand(&sys, 100, 100).unwrap();
        let n = net.species.len();
        for rx in &net.reactions {
            let a = rx.consume_dense(n);
            let b = rx.produce_dense(n);
            let mut nu = vec![0i64; n];
            for (i, d) in rx.stoich() {
                nu[i] = d;
            }
            for i in 0..n {
                assert_eq!(i64::from(b[i]), i64::from(a[i]) + nu[i]);
            }
        }
    }

    #[test]
    fn propensity_matches_embedding_count_for_distinct_species() {
        let sys = parse_model("%agent: E(s)\n%agent: S(e)\n%init: 3 E(s)\n%init: 4 S(e)\nb: E(s),S(e) -> E(s!1),S(e!1) @ 0.5\n").unwrap();
        let net = expand(&sys, 100, 100).unwrap();
        let lhs = &sys.rules[0].lhs;
        let mut mix = Vec::new();
        for (sp, &n) in &sys.init {
            for _ in 0..n {
                mix.push(sp.graph().clone());
            }
        }
        let mixture = SiteGraph::disjoint_union(mix.iter());
        let count = embeddings(lhs, &mixture).len() as f64;
        assert_eq!(propensity(&net.reactions[0], &net.init_f64()), 0.5 * count);
    }

    #[test]
    fn closed_rule_with_pattern_lhs_is_rejected() {
        let sys = parse_model("%agent: A(x,y)\n%agent: P()\n%init: 1 A(x,y)\nr: A(x) -> A(x),P() @@ 2\n");
        let sys = sys.unwrap_or_else(|e| panic!("{e}"));
        assert!(matches!(expand(&sys, 10, 10), Err(ExpandError::ClosedNeedsSpecies(_))));
    }
}
