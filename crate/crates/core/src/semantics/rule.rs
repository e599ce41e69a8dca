//! Rewrite rules, their edit scripts and species classification.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::expr::Expr;
use crate::kappa::graph::{Link, SiteGraph};
use crate::kappa::syntax::{Entry, Expression};
use crate::kappa::{occurrence_count, KappaError, Signature, Species};

#[derive(Debug, Clone, PartialEq)]
pub enum RateLaw {
    MassAction(f64),
    /// The full propensity of every reaction generated from the rule.
    Closed(Expr),
}

impl RateLaw {
    pub fn is_zero(&self) -> bool {
        match self {
            RateLaw::MassAction(k) => *k == 0.0,
            RateLaw::Closed(e) => e.is_zero(),
        }
    }
}

impl fmt::Display for RateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateLaw::MassAction(k) => write!(f, "@ {k}"),
            RateLaw::Closed(e) => write!(f, "@@ {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    User,
    Reduction(String),
}

/// A column pairs an lhs agent with an rhs agent. `(Some, Some)` is a
/// preserved agent, `(Some, None)` a deletion and `(None, Some)` a creation.
pub type Column = (Option<usize>, Option<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub lhs: SiteGraph,
    pub rhs: SiteGraph,
    pub columns: Vec<Column>,
    pub rate: RateLaw,
    pub origin: Origin,
}

/// A connected component of one side of a rule.
#[derive(Debug, Clone)]
pub struct SideComponent {
    pub agents: Vec<usize>,
    pub graph: SiteGraph,
    /// Set when the component is fully specified.
    pub species: Option<Species>,
}

impl Rule {
    /// Aligns agents by position: equal names at one position are the same
    /// agent, otherwise the lhs agent is deleted and the rhs one created.
    pub fn from_expressions(name: impl Into<String>, lhs: &Expression, rhs: &Expression, rate: RateLaw) -> Result<Rule, KappaError> {
        let (lg, lpos) = SiteGraph::from_entries(&lhs.entries)?;
        let (rg, rpos) = SiteGraph::from_entries(&rhs.entries)?;
        let mut columns = Vec::new();
        for i in 0..lpos.len().max(rpos.len()) {
            let l = lpos.get(i).copied().flatten();
            let r = rpos.get(i).copied().flatten();
            match (l, r) {
                (Some(a), Some(b)) if lg.agents[a].name != rg.agents[b].name => {
                    columns.push((Some(a), None));
                    columns.push((None, Some(b)));
                }
                (None, None) => {}
                c => columns.push(c),
            }
        }
        Ok(Rule {
            name: name.into(),
            lhs: lg,
            rhs: rg,
            columns,
            rate,
            origin: Origin::User,
        })
    }

    pub fn lhs_components(&self, sig: &Signature) -> Vec<SideComponent> {
        side_components(&self.lhs, sig)
    }

    pub fn rhs_components(&self, sig: &Signature) -> Vec<SideComponent> {
        side_components(&self.rhs, sig)
    }

    /// Agent names on either side.
    pub fn agent_names(&self) -> impl Iterator<Item = &str> {
        self.lhs.agent_names().chain(self.rhs.agent_names())
    }

    /// Concrete syntax of both sides in column order, with `.` for the
    /// missing partner of a created or deleted agent.
    pub fn sides_text(&self) -> (String, String) {
        let lorder: Vec<usize> = self.columns.iter().filter_map(|c| c.0).collect();
        let rorder: Vec<usize> = self.columns.iter().filter_map(|c| c.1).collect();
        let lexpr = self.lhs.permuted(&lorder).to_expression();
        let rexpr = self.rhs.permuted(&rorder).to_expression();
        let (mut li, mut ri) = (lexpr.entries.into_iter(), rexpr.entries.into_iter());
        let mut le = Vec::new();
        let mut re = Vec::new();
        for c in &self.columns {
            le.push(if c.0.is_some() { li.next().unwrap() } else { Entry::Fictitious });
            re.push(if c.1.is_some() { ri.next().unwrap() } else { Entry::Fictitious });
        }
        for side in [&mut le, &mut re] {
            while side.last() == Some(&Entry::Fictitious) {
                side.pop();
            }
        }
        (
            Expression { entries: le }.to_string(),
            Expression { entries: re }.to_string(),
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, r) = self.sides_text();
        write!(f, "{}: {l} -> {r} {}", self.name, self.rate)
    }
}

fn side_components(g: &SiteGraph, sig: &Signature) -> Vec<SideComponent> {
    g.components()
        .into_iter()
        .map(|agents| {
            let graph = g.subgraph(&agents);
            let species = graph
                .is_fully_specified(sig)
                .then(|| Species::from_graph_unchecked(&graph));
            SideComponent { agents, graph, species }
        })
        .collect()
}

/// One elementary step of an edit script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Edit {
    Creation { agent: String },
    Deletion { agent: String },
    Unbinding { agent: String, site: String },
    Binding { a: String, x: String, b: String, y: String },
    Modification { agent: String, site: String, from: String, to: String },
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::Creation { agent } => write!(f, "creation({agent})"),
            Edit::Deletion { agent } => write!(f, "deletion({agent})"),
            Edit::Unbinding { agent, site } => write!(f, "unbinding({agent}.{site})"),
            Edit::Binding { a, x, b, y } => write!(f, "binding({a}.{x}, {b}.{y})"),
            Edit::Modification { agent, site, from, to } => {
                write!(f, "modification({agent}.{site}: {from} -> {to})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("created agent `{0}` is not fully specified")]
    CreatedIncomplete(String),
    #[error("deleted agent `{0}` must document its full interface without wildcards")]
    DeletedPartial(String),
    #[error("agent `{agent}` has site `{site}` on one side only")]
    InterfaceMismatch { agent: String, site: String },
    #[error("internal state of `{agent}.{site}` cannot be introduced or erased")]
    StateMismatch { agent: String, site: String },
    #[error("binding state of `{agent}.{site}` cannot change from {from} to {to}")]
    IllegalLinkChange { agent: String, site: String, from: &'static str, to: &'static str },
    #[error(transparent)]
    Kappa(#[from] KappaError),
}

fn link_kind(l: Link) -> &'static str {
    match l {
        Link::Free => "free",
        Link::Wildcard => "wildcard",
        Link::Bound(..) => "bound",
    }
}

/// Proves well-formedness by producing the edit script taking the lhs to
/// the rhs, or reports the first obstruction.
pub fn validate_rule(r: &Rule, sig: &Signature) -> Result<Vec<Edit>, RuleError> {
    let mut lcol = vec![usize::MAX; r.lhs.len()];
    let mut rcol = vec![usize::MAX; r.rhs.len()];
    for (ci, c) in r.columns.iter().enumerate() {
        if let Some(l) = c.0 {
            lcol[l] = ci;
        }
        if let Some(x) = c.1 {
            rcol[x] = ci;
        }
    }
    let label = |ci: usize| {
        let name = match r.columns[ci] {
            (Some(l), _) => &r.lhs.agents[l].name,
            (None, Some(x)) => &r.rhs.agents[x].name,
            (None, None) => unreachable!("empty column"),
        };
        format!("{name}#{ci}")
    };
    type End = (usize, String);
    let bond = |a: End, b: End| if a <= b { (a, b) } else { (b, a) };
    let mut creations = Vec::new();
    let mut deletions = Vec::new();
    let mut mods = Vec::new();
    let mut broken: BTreeSet<(End, End)> = BTreeSet::new();
    let mut released: Vec<End> = Vec::new();
    let mut made: BTreeSet<(End, End)> = BTreeSet::new();
    for (ci, c) in r.columns.iter().enumerate() {
        match *c {
            (Some(l), None) => {
                let a = &r.lhs.agents[l];
                let whole = sig.agent(&a.name).is_some_and(|d| d.sites.len() == a.sites.len());
                if !whole || a.sites.iter().any(|s| s.link == Link::Wildcard) {
                    return Err(RuleError::DeletedPartial(a.name.clone()));
                }
                for s in &a.sites {
                    if let Link::Bound(pa, ps) = s.link {
                        let other = (lcol[pa], r.lhs.agents[pa].sites[ps].name.clone());
                        broken.insert(bond((ci, s.name.clone()), other));
                    }
                }
                deletions.push(Edit::Deletion { agent: label(ci) });
            }
            (None, Some(x)) => {
                let a = &r.rhs.agents[x];
                let wild = a.sites.iter().any(|s| s.link == Link::Wildcard);
                if wild || r.rhs.subgraph(&[x]).check_fully_specified(sig).is_err() {
                    return Err(RuleError::CreatedIncomplete(a.name.clone()));
                }
                creations.push(Edit::Creation { agent: label(ci) });
                for s in &a.sites {
                    if let Link::Bound(b, bs) = s.link {
                        let other = (rcol[b], r.rhs.agents[b].sites[bs].name.clone());
                        made.insert(bond((ci, s.name.clone()), other));
                    }
                }
            }
            (Some(l), Some(x)) => {
                let la = &r.lhs.agents[l];
                let ra = &r.rhs.agents[x];
                let missing = la
                    .sites
                    .iter()
                    .find(|s| ra.site(&s.name).is_none())
                    .or_else(|| ra.sites.iter().find(|s| la.site(&s.name).is_none()));
                if let Some(s) = missing {
                    return Err(RuleError::InterfaceMismatch { agent: la.name.clone(), site: s.name.clone() });
                }
                for (ls, rs) in la.sites.iter().zip(&ra.sites) {
                    match (&ls.internal, &rs.internal) {
                        (Some(u), Some(v)) if u != v => mods.push(Edit::Modification {
                            agent: label(ci),
                            site: ls.name.clone(),
                            from: u.clone(),
                            to: v.clone(),
                        }),
                        (Some(_), None) | (None, Some(_)) => {
                            return Err(RuleError::StateMismatch { agent: la.name.clone(), site: ls.name.clone() })
                        }
                        _ => {}
                    }
                    let here = (ci, ls.name.clone());
                    let lend = |pa: usize, ps: usize| (lcol[pa], r.lhs.agents[pa].sites[ps].name.clone());
                    let rend = |b: usize, bs: usize| (rcol[b], r.rhs.agents[b].sites[bs].name.clone());
                    match (ls.link, rs.link) {
                        (Link::Free, Link::Free) | (Link::Wildcard, Link::Wildcard) => {}
                        (Link::Wildcard, Link::Free) => released.push(here),
                        (Link::Bound(pa, ps), Link::Free) => {
                            broken.insert(bond(here, lend(pa, ps)));
                        }
                        (Link::Free, Link::Bound(b, bs)) => {
                            made.insert(bond(here, rend(b, bs)));
                        }
                        (Link::Bound(pa, ps), Link::Bound(b, bs)) => {
                            let (lp, rp) = (lend(pa, ps), rend(b, bs));
                            if lp != rp {
                                broken.insert(bond(here.clone(), lp));
                                made.insert(bond(here, rp));
                            }
                        }
                        _ => {
                            return Err(RuleError::IllegalLinkChange {
                                agent: la.name.clone(),
                                site: ls.name.clone(),
                                from: link_kind(ls.link),
                                to: link_kind(rs.link),
                            })
                        }
                    }
                }
            }
            (None, None) => {}
        }
    }
    let mut script = creations;
    for ((ci, site), _) in broken {
        script.push(Edit::Unbinding { agent: label(ci), site });
    }
    for (ci, site) in released {
        script.push(Edit::Unbinding { agent: label(ci), site });
    }
    script.extend(deletions);
    script.extend(mods);
    for ((ci, x), (cj, y)) in made {
        script.push(Edit::Binding { a: label(ci), x, b: label(cj), y });
    }
    Ok(script)
}

/// Occurrence-count classification of a species in a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Reactant,
    Modifier,
    Product,
    Absent,
    /// Occurs on both sides, more often on the left.
    NetConsumer,
    /// Occurs on both sides, more often on the right.
    NetProducer,
}

pub fn classify_species(r: &Rule, sp: &Species) -> Role {
    let l = occurrence_count(sp, &r.lhs);
    let x = occurrence_count(sp, &r.rhs);
    match (l, x) {
        (0, 0) => Role::Absent,
        (_, 0) => Role::Reactant,
        (0, _) => Role::Product,
        (a, b) if a == b => Role::Modifier,
        (a, b) if a > b => Role::NetConsumer,
        _ => Role::NetProducer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::{canonicalize_species, parse_expression, parse_signature};

    fn sig() -> Signature {
        parse_signature("%agent: A(x~u~p,z)\n%agent: B(y)\n%agent: E(s)\n%agent: S(e)\n%agent: P()").unwrap()
    }

    fn rule(l: &str, r: &str) -> Rule {
        let s = sig();
        let le = parse_expression(l, &s).unwrap();
        let re = parse_expression(r, &s).unwrap();
        Rule::from_expressions("r", &le, &re, RateLaw::MassAction(1.0)).unwrap()
    }

    fn sp(text: &str) -> Species {
        let s = sig();
        canonicalize_species(&SiteGraph::from_expression(&parse_expression(text, &s).unwrap()).unwrap(), &s).unwrap()
    }

    #[test]
    fn creation_and_binding() {
        let script = validate_rule(&rule("A(z)", "A(z!1),B(y!1)"), &sig()).unwrap();
        assert_eq!(
            script.iter().map(ToString::to_string).collect::<Vec<_>>(),
            ["creation(B#1)", "binding(A#0.z, B#1.y)"]
        );
    }

    #[test]
    fn modification() {
        let script = validate_rule(&rule("A(x~u)", "A(x~p)"), &sig()).unwrap();
        assert_eq!(script.len(), 1);
        assert!(matches!(script[0], Edit::Modification { .. }));
    }

    #[test]
    fn deleting_partially_documented_agent_fails() {
        let r = rule("A(z!1),B(y!1)", ".,B(y)");
        assert!(matches!(validate_rule(&r, &sig()), Err(RuleError::DeletedPartial(_))));
        let ok = rule("A(x~u,z!1),B(y!1)", ".,B(y)");
        let script = validate_rule(&ok, &sig()).unwrap();
        assert!(script.contains(&Edit::Deletion { agent: "A#0".into() }));
    }

    #[test]
    fn incomplete_creation_fails() {
        let r = rule("B(y)", "B(y),A(z)");
        assert!(matches!(validate_rule(&r, &sig()), Err(RuleError::CreatedIncomplete(_))));
    }

    #[test]
    fn unbinding_reported_once() {
        let script = validate_rule(&rule("E(s!1),S(e!1)", "E(s),S(e)"), &sig()).unwrap();
        assert_eq!(script, vec![Edit::Unbinding { agent: "E#0".into(), site: "s".into() }]);
    }

    #[test]
    fn classification() {
        let r = rule("E(s),S(e)", "E(s),P()");
        assert_eq!(classify_species(&r, &sp("E(s)")), Role::Modifier);
        assert_eq!(classify_species(&r, &sp("S(e)")), Role::Reactant);
        assert_eq!(classify_species(&r, &sp("P()")), Role::Product);
        assert_eq!(classify_species(&r, &sp("B(y)")), Role::Absent);
    }

    #[test]
    fn printed_sides_reparse_to_same_rule() {
        for (l, r) in [("A(z)", "A(z!1),B(y!1)"), ("E(s),S(e)", "E(s),P()"), ("B(y)", "."), (".", "P()")] {
            let a = rule(l, r);
            let (pl, pr) = a.sides_text();
            let b = rule(&pl, &pr);
            assert_eq!(a.columns.len(), b.columns.len(), "{l} -> {r}");
            assert_eq!(a.sides_text(), b.sides_text());
        }
    }
}
