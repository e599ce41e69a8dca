//! Canonical forms by partition refinement.
//!
//! Vertices are first partitioned by colour, the partition is refined
//! until equitable, and ambiguous cells are individualized one vertex at a
//! time. Every discrete leaf gives an ordering; the ordering whose
//! serialization is lexicographically least is canonical.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::graph::{Link, SiteGraph};
use super::signature::Signature;
use super::KappaError;

/// A vertex-coloured multigraph with port- and layer-labelled edges.
#[derive(Debug, Clone, Default)]
pub struct ColoredGraph {
    pub colors: Vec<String>,
    /// `(u, port_u, v, port_v, layer)`.
    pub edges: Vec<(usize, String, usize, String, u8)>,
}

struct Prepared {
    colors: Vec<usize>,
    /// Per vertex: `(layer, own port, neighbour, neighbour port)`.
    adj: Vec<Vec<(u8, usize, usize, usize)>>,
    color_names: Vec<String>,
    port_names: Vec<String>,
}

impl Prepared {
    fn new(g: &ColoredGraph) -> Self {
        let mut color_names: Vec<String> = g.colors.clone();
        color_names.sort();
        color_names.dedup();
        let mut port_names: Vec<String> = g
            .edges
            .iter()
            .flat_map(|(_, p, _, q, _)| [p.clone(), q.clone()])
            .collect();
        port_names.sort();
        port_names.dedup();
        let color_id = |c: &String| color_names.binary_search(c).unwrap();
        let port_id = |p: &String| port_names.binary_search(p).unwrap();
        let colors = g.colors.iter().map(color_id).collect();
        let mut adj = vec![Vec::new(); g.colors.len()];
        for (u, pu, v, pv, layer) in &g.edges {
            adj[*u].push((*layer, port_id(pu), *v, port_id(pv)));
            adj[*v].push((*layer, port_id(pv), *u, port_id(pu)));
        }
        Prepared {
            colors,
            adj,
            color_names,
            port_names,
        }
    }

    fn refine(&self, cells: &mut Vec<Vec<usize>>) {
        let n = self.colors.len();
        let mut cell_of = vec![0usize; n];
        loop {
            for (ci, cell) in cells.iter().enumerate() {
                for &v in cell {
                    cell_of[v] = ci;
                }
            }
            let mut changed = false;
            let mut next = Vec::with_capacity(cells.len());
            for cell in cells.iter() {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut groups: BTreeMap<Vec<(u8, usize, usize, usize)>, Vec<usize>> = BTreeMap::new();
                for &v in cell {
                    let mut sig: Vec<(u8, usize, usize, usize)> = self.adj[v]
                        .iter()
                        .map(|&(layer, p, w, q)| (layer, p, q, cell_of[w]))
                        .collect();
                    sig.sort_unstable();
                    groups.entry(sig).or_default().push(v);
                }
                if groups.len() > 1 {
                    changed = true;
                }
                next.extend(groups.into_values());
            }
            *cells = next;
            if !changed {
                return;
            }
        }
    }

    fn serialize(&self, order: &[usize]) -> String {
        let mut pos = vec![0usize; order.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut out = String::new();
        for &v in order {
            out.push_str(&self.color_names[self.colors[v]]);
            out.push('\u{1}');
        }
        let mut edges: Vec<(u8, usize, usize, usize, usize)> = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &(layer, p, w, q) in list {
                let a = (pos[u], p);
                let b = (pos[w], q);
                if a <= b {
                    edges.push((layer, a.0, a.1, b.0, b.1));
                }
            }
        }
        edges.sort_unstable();
        for (layer, a, p, b, q) in edges {
            out.push_str(&format!(
                "{layer}:{a}.{}-{b}.{}\u{1}",
                self.port_names[p], self.port_names[q]
            ));
        }
        out
    }

    fn search(&self, mut cells: Vec<Vec<usize>>, best: &mut Option<(String, Vec<usize>)>) {
        self.refine(&mut cells);
        match cells.iter().position(|c| c.len() > 1) {
            None => {
                let order: Vec<usize> = cells.into_iter().map(|c| c[0]).collect();
                let s = self.serialize(&order);
                if best.as_ref().is_none_or(|(b, _)| s < *b) {
                    *best = Some((s, order));
                }
            }
            Some(target) => {
                let cell = cells[target].clone();
                let mut tried: Vec<Vec<(u8, usize, usize, usize)>> = Vec::new();
                for &v in &cell {
                    // Twins span the same subtree; one of them suffices.
                    let mut nb = self.adj[v].clone();
                    nb.sort_unstable();
                    if nb.iter().all(|&(_, _, w, _)| !cell.contains(&w)) {
                        if tried.contains(&nb) {
                            continue;
                        }
                        tried.push(nb);
                    }
                    let mut branch = Vec::with_capacity(cells.len() + 1);
                    branch.extend_from_slice(&cells[..target]);
                    branch.push(vec![v]);
                    branch.push(cell.iter().copied().filter(|&w| w != v).collect());
                    branch.extend_from_slice(&cells[target + 1..]);
                    self.search(branch, best);
                }
            }
        }
    }
}

/// Returns `(order, serialization)` with `order[position] = vertex`.
pub fn canonical_labeling(g: &ColoredGraph) -> (Vec<usize>, String) {
    let prep = Prepared::new(g);
    if g.colors.is_empty() {
        return (Vec::new(), String::new());
    }
    let mut initial: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in prep.colors.iter().enumerate() {
        initial.entry(c).or_default().push(v);
    }
    let mut best = None;
    prep.search(initial.into_values().collect(), &mut best);
    let (s, order) = best.expect("non-empty graph has a leaf");
    (order, s)
}

/// Vertex colour of an agent: its name and the local state of every site.
pub(crate) fn agent_color(a: &super::graph::GAgent) -> String {
    let mut c = a.name.clone();
    c.push('(');
    for s in &a.sites {
        c.push_str(&s.name);
        if let Some(v) = &s.internal {
            c.push('~');
            c.push_str(v);
        }
        c.push(match s.link {
            Link::Free => ' ',
            Link::Wildcard => '_',
            Link::Bound(..) => '!',
        });
    }
    c.push(')');
    c
}

pub fn colored_graph(g: &SiteGraph) -> ColoredGraph {
    let colors = g.agents.iter().map(agent_color).collect();
    let mut edges = Vec::new();
    for (ai, a) in g.agents.iter().enumerate() {
        for (si, s) in a.sites.iter().enumerate() {
            if let Link::Bound(b, bs) = s.link {
                if (ai, si) < (b, bs) {
                    edges.push((ai, s.name.clone(), b, g.agents[b].sites[bs].name.clone(), 0));
                }
            }
        }
    }
    ColoredGraph { colors, edges }
}

pub fn canonical_order(g: &SiteGraph) -> Vec<usize> {
    canonical_labeling(&colored_graph(g)).0
}

/// The graph rewritten in canonical agent order.
pub fn canonical_graph(g: &SiteGraph) -> SiteGraph {
    g.permuted(&canonical_order(g))
}

/// Canonical concrete syntax; equal iff the graphs are isomorphic.
pub fn canonical_text(g: &SiteGraph) -> String {
    canonical_graph(g).to_string()
}

/// A connected, fully specified site-graph together with its canonical key.
/// Equality and ordering go through the key only.
#[derive(Debug, Clone)]
pub struct Species {
    graph: SiteGraph,
    key: String,
}

impl Species {
    pub fn graph(&self) -> &SiteGraph {
        &self.graph
    }

    /// Canonical serialization, identical for structurally equal species
    /// across runs and platforms.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn canonical_key(&self) -> &[u8] {
        self.key.as_bytes()
    }

    /// Skips the connectivity and specification checks; for graphs already
    /// known to be species.
    pub(crate) fn from_graph_unchecked(g: &SiteGraph) -> Species {
        let graph = canonical_graph(g);
        let key = graph.to_string();
        Species { graph, key }
    }
}

impl PartialEq for Species {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Species {}

impl PartialOrd for Species {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Species {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl std::hash::Hash for Species {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

impl Serialize for Species {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.key)
    }
}

pub fn canonicalize_species(m: &SiteGraph, sig: &Signature) -> Result<Species, KappaError> {
    m.check_fully_specified(sig)?;
    if m.is_empty() || !m.is_connected() {
        return Err(KappaError::NotConnected);
    }
    Ok(Species::from_graph_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::signature::parse_signature;
    use crate::kappa::syntax::parse_expression;

    fn sig() -> Signature {
        parse_signature("%agent: M(d~u~p,b)\n%agent: A(x,y)\n%agent: B(y)").unwrap()
    }

    fn g(text: &str) -> SiteGraph {
        SiteGraph::from_expression(&parse_expression(text, &sig()).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_dimer_key() {
        let a = canonicalize_species(&g("M(d~u,b!1),M(d~u,b!1)"), &sig()).unwrap();
        let b = canonicalize_species(&g("M(b!7,d~u),M(d~u,b!7)"), &sig()).unwrap();
        assert_eq!(a.key(), b.key());
    }

    #[test]
    fn internal_state_distinguishes() {
        let a = canonicalize_species(&g("M(d~u,b)"), &sig()).unwrap();
        let b = canonicalize_species(&g("M(d~p,b)"), &sig()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn heterodimer_orientation_irrelevant() {
        let a = canonicalize_species(&g("M(d~u,b!1),M(d~p,b!1)"), &sig()).unwrap();
        let b = canonicalize_species(&g("M(d~p,b!1),M(d~u,b!1)"), &sig()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.key(), "M(b!1,d~p),M(b!1,d~u)");
    }

    #[test]
    fn rejects_non_species() {
        assert!(matches!(
            canonicalize_species(&g("M(d~u,b),M(d~u,b)"), &sig()),
            Err(KappaError::NotConnected)
        ));
        assert!(matches!(
            canonicalize_species(&g("M(b)"), &sig()),
            Err(KappaError::NotFullySpecified(_))
        ));
    }

    #[test]
    fn chain_vs_ring() {
        let chain = g("A(x,y!1),A(x!1,y!2),A(x!2,y)");
        let ring = g("A(x!3,y!1),A(x!1,y!2),A(x!2,y!3)");
        assert_ne!(canonical_text(&chain), canonical_text(&ring));
        let chain2 = g("A(x!2,y),A(x,y!1),A(x!1,y!2)");
        assert_eq!(canonical_text(&chain), canonical_text(&chain2));
    }
}
