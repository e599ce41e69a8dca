//! Site-graphs: the explicit-link form of an expression.

use std::collections::BTreeMap;
use std::fmt;

use super::signature::Signature;
use super::syntax::{Agent, Binding, Entry, Expression, Site};
use super::KappaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Free,
    Wildcard,
    /// Partner agent index and site index within that agent.
    Bound(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GSite {
    pub name: String,
    pub internal: Option<String>,
    pub link: Link,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GAgent {
    pub name: String,
    /// Sorted by site name.
    pub sites: Vec<GSite>,
}

impl GAgent {
    pub fn site(&self, name: &str) -> Option<usize> {
        self.sites.binary_search_by(|s| s.name.as_str().cmp(name)).ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SiteGraph {
    pub agents: Vec<GAgent>,
}

impl SiteGraph {
    /// Builds the graph of the non-fictitious entries. Labels occurring once
    /// are read as free; labels occurring more than twice are rejected. The
    /// second value maps each entry position to its agent index.
    pub fn from_entries(entries: &[Entry]) -> Result<(SiteGraph, Vec<Option<usize>>), KappaError> {
        let mut agents = Vec::new();
        let mut positions = Vec::with_capacity(entries.len());
        let mut ends: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for entry in entries {
            match entry {
                Entry::Fictitious => positions.push(None),
                Entry::Agent(a) => {
                    let idx = agents.len();
                    positions.push(Some(idx));
                    let mut sites: Vec<&Site> = a.sites.iter().collect();
                    sites.sort_by(|x, y| x.name.cmp(&y.name));
                    for w in sites.windows(2) {
                        if w[0].name == w[1].name {
                            return Err(KappaError::RepeatedSite {
                                agent: a.name.clone(),
                                site: w[0].name.clone(),
                            });
                        }
                    }
                    let mut gsites = Vec::with_capacity(sites.len());
                    for (si, s) in sites.iter().enumerate() {
                        let link = match s.binding {
                            Binding::Free => Link::Free,
                            Binding::Wildcard => Link::Wildcard,
                            Binding::Label(l) => {
                                ends.entry(l).or_default().push((idx, si));
                                Link::Free
                            }
                        };
                        gsites.push(GSite {
                            name: s.name.clone(),
                            internal: s.internal.clone(),
                            link,
                        });
                    }
                    agents.push(GAgent {
                        name: a.name.clone(),
                        sites: gsites,
                    });
                }
            }
        }
        for (label, e) in ends {
            match e.as_slice() {
                [_] => {}
                [(a1, s1), (a2, s2)] => {
                    if (a1, s1) == (a2, s2) {
                        return Err(KappaError::LabelOveruse { label, count: 2 });
                    }
                    agents[*a1].sites[*s1].link = Link::Bound(*a2, *s2);
                    agents[*a2].sites[*s2].link = Link::Bound(*a1, *s1);
                }
                more => {
                    return Err(KappaError::LabelOveruse {
                        label,
                        count: more.len(),
                    })
                }
            }
        }
        Ok((SiteGraph { agents }, positions))
    }

    pub fn from_expression(e: &Expression) -> Result<SiteGraph, KappaError> {
        Self::from_entries(&e.entries).map(|(g, _)| g)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Back to syntax, labels numbered by first occurrence.
    pub fn to_expression(&self) -> Expression {
        let mut labels: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        let mut next = 1u32;
        let mut entries = Vec::with_capacity(self.agents.len());
        for (ai, a) in self.agents.iter().enumerate() {
            let sites = a
                .sites
                .iter()
                .enumerate()
                .map(|(si, s)| {
                    let binding = match s.link {
                        Link::Free => Binding::Free,
                        Link::Wildcard => Binding::Wildcard,
                        Link::Bound(pa, ps) => {
                            let key = if (ai, si) < (pa, ps) { (ai, si) } else { (pa, ps) };
                            let l = *labels.entry(key).or_insert_with(|| {
                                next += 1;
                                next - 1
                            });
                            Binding::Label(l)
                        }
                    };
                    Site {
                        name: s.name.clone(),
                        internal: s.internal.clone(),
                        binding,
                    }
                })
                .collect();
            entries.push(Entry::Agent(Agent {
                name: a.name.clone(),
                sites,
            }));
        }
        Expression { entries }
    }

    /// Connected components under the bond relation, each sorted, ordered
    /// by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.agents.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut i = 0;
            while i < members.len() {
                let a = members[i];
                for s in &self.agents[a].sites {
                    if let Link::Bound(b, _) = s.link {
                        if comp[b] == usize::MAX {
                            comp[b] = id;
                            members.push(b);
                        }
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// The induced subgraph on `members` (in the given order). Bonds leaving
    /// the subset become free.
    pub fn subgraph(&self, members: &[usize]) -> SiteGraph {
        let mut index = vec![usize::MAX; self.agents.len()];
        for (new, &old) in members.iter().enumerate() {
            index[old] = new;
        }
        let agents = members
            .iter()
            .map(|&old| {
                let a = &self.agents[old];
                GAgent {
                    name: a.name.clone(),
                    sites: a
                        .sites
                        .iter()
                        .map(|s| GSite {
                            name: s.name.clone(),
                            internal: s.internal.clone(),
                            link: match s.link {
                                Link::Bound(b, bs) if index[b] != usize::MAX => Link::Bound(index[b], bs),
                                Link::Bound(..) => Link::Free,
                                l => l,
                            },
                        })
                        .collect(),
                }
            })
            .collect();
        SiteGraph { agents }
    }

    /// Reorders agents: `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> SiteGraph {
        self.subgraph(order)
    }

    pub fn disjoint_union<'a>(parts: impl IntoIterator<Item = &'a SiteGraph>) -> SiteGraph {
        let mut agents = Vec::new();
        for g in parts {
            let off = agents.len();
            for a in &g.agents {
                agents.push(GAgent {
                    name: a.name.clone(),
                    sites: a
                        .sites
                        .iter()
                        .map(|s| GSite {
                            name: s.name.clone(),
                            internal: s.internal.clone(),
                            link: match s.link {
                                Link::Bound(b, bs) => Link::Bound(b + off, bs),
                                l => l,
                            },
                        })
                        .collect(),
                });
            }
        }
        SiteGraph { agents }
    }

    /// Mixture condition: every agent documents its full interface, no
    /// wildcard bonds, every internal site carries a state.
    pub fn check_fully_specified(&self, sig: &Signature) -> Result<(), KappaError> {
        for a in &self.agents {
            let decl = sig.agent(&a.name).ok_or_else(|| KappaError::UnknownAgent(a.name.clone()))?;
            if a.sites.len() != decl.sites.len() || a.sites.iter().any(|s| !decl.sites.contains_key(&s.name)) {
                return Err(KappaError::NotFullySpecified(format!(
                    "agent `{}` does not document its full interface",
                    a.name
                )));
            }
            for s in &a.sites {
                if s.link == Link::Wildcard {
                    return Err(KappaError::NotFullySpecified(format!(
                        "wildcard bond on `{}.{}`",
                        a.name, s.name
                    )));
                }
                let internal = !decl.sites[&s.name].internal_values.is_empty();
                if internal && s.internal.is_none() {
                    return Err(KappaError::NotFullySpecified(format!(
                        "site `{}.{}` lacks an internal state",
                        a.name, s.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_fully_specified(&self, sig: &Signature) -> bool {
        self.check_fully_specified(sig).is_ok()
    }

    pub fn agent_names(&self) -> impl Iterator<Item = &str> {
        self.agents.iter().map(|a| a.name.as_str())
    }
}

impl fmt::Display for SiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expression())
    }
}

/// Pattern conditions (i)-(v) on a written expression: licensed by the
/// signature, no repeated sites, every label used exactly twice.
pub fn check_pattern(e: &Expression, sig: &Signature) -> Result<(), KappaError> {
    super::syntax::check_licensed(e, sig)?;
    for (label, n) in e.label_counts() {
        if n != 2 {
            return Err(KappaError::DanglingBond(label));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::signature::parse_signature;
    use crate::kappa::syntax::parse_expression;

    fn sig() -> Signature {
        parse_signature("%agent: A(x,y)\n%agent: B(y)\n%agent: M(d~u~p,b)").unwrap()
    }

    fn g(text: &str) -> SiteGraph {
        SiteGraph::from_expression(&parse_expression(text, &sig()).unwrap()).unwrap()
    }

    #[test]
    fn components_split() {
        let graph = g("A(x!1),B(y),B(y!1)");
        assert_eq!(graph.components(), vec![vec![0, 2], vec![1]]);
        assert!(!graph.is_connected());
    }

    #[test]
    fn round_trip_through_expression() {
        let graph = g("M(d~u,b!4),M(d~p,b!4)");
        assert_eq!(graph.to_expression().to_string(), "M(b!1,d~u),M(b!1,d~p)");
        assert_eq!(g(&graph.to_string()), graph);
    }

    #[test]
    fn dangling_rejected_by_pattern_check() {
        let e = parse_expression("A(x!1)", &sig()).unwrap();
        assert!(matches!(check_pattern(&e, &sig()), Err(KappaError::DanglingBond(1))));
    }

    #[test]
    fn mixture_condition() {
        assert!(g("M(d~u,b)").is_fully_specified(&sig()));
        assert!(!g("M(b)").is_fully_specified(&sig()));
        assert!(!g("A(x!_,y)").is_fully_specified(&sig()));
    }
}
