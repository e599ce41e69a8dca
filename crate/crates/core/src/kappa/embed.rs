//! Embeddings of patterns into site-graphs.

use super::canon::{canonical_text, Species};
use super::graph::{Link, SiteGraph};

/// `map[pattern_agent] = target_agent`.
pub type Embedding = Vec<usize>;

fn site_matches(p: &SiteGraph, t: &SiteGraph, pa: usize, ta: usize, map: &[usize]) -> bool {
    let pag = &p.agents[pa];
    let tag = &t.agents[ta];
    if pag.name != tag.name {
        return false;
    }
    for ps in &pag.sites {
        let Some(tsi) = tag.site(&ps.name) else {
            return false;
        };
        let ts = &tag.sites[tsi];
        if ps.internal.is_some() && ps.internal != ts.internal {
            return false;
        }
        match ps.link {
            Link::Free => {
                if ts.link != Link::Free {
                    return false;
                }
            }
            Link::Wildcard => {
                if ts.link == Link::Free {
                    return false;
                }
            }
            Link::Bound(pb, pbs) => {
                let Link::Bound(tb, tbs) = ts.link else {
                    return false;
                };
                if t.agents[tb].sites[tbs].name != p.agents[pb].sites[pbs].name {
                    return false;
                }
                if map[pb] != usize::MAX && map[pb] != tb {
                    return false;
                }
                if t.agents[tb].name != p.agents[pb].name {
                    return false;
                }
            }
        }
    }
    true
}

fn forced_candidate(p: &SiteGraph, t: &SiteGraph, pa: usize, map: &[usize]) -> Option<Option<usize>> {
    for ps in &p.agents[pa].sites {
        if let Link::Bound(pb, pbs) = ps.link {
            if map[pb] != usize::MAX {
                let tb = map[pb];
                let site_name = &p.agents[pb].sites[pbs].name;
                let forced = t.agents[tb]
                    .site(site_name)
                    .and_then(|tsi| match t.agents[tb].sites[tsi].link {
                        Link::Bound(ta, _) => Some(ta),
                        _ => None,
                    });
                return Some(forced);
            }
        }
    }
    None
}

fn extend(p: &SiteGraph, t: &SiteGraph, order: &[usize], depth: usize, map: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Embedding>) {
    if depth == order.len() {
        out.push(map.clone());
        return;
    }
    let pa = order[depth];
    let mut try_one = |ta: usize, map: &mut Vec<usize>, used: &mut Vec<bool>| {
        if used[ta] || !site_matches(p, t, pa, ta, map) {
            return;
        }
        map[pa] = ta;
        used[ta] = true;
        extend(p, t, order, depth + 1, map, used, out);
        map[pa] = usize::MAX;
        used[ta] = false;
    };
    match forced_candidate(p, t, pa, map) {
        Some(Some(ta)) => try_one(ta, map, used),
        Some(None) => {}
        None => {
            for ta in 0..t.agents.len() {
                try_one(ta, map, used);
            }
        }
    }
}

/// All injective structure-preserving maps from `p` into `t`, in
/// lexicographic order of the image vectors.
pub fn embeddings(p: &SiteGraph, t: &SiteGraph) -> Vec<Embedding> {
    let mut out = Vec::new();
    if p.agents.len() > t.agents.len() {
        return out;
    }
    let order: Vec<usize> = (0..p.agents.len()).collect();
    let mut map = vec![usize::MAX; p.agents.len()];
    let mut used = vec![false; t.agents.len()];
    extend(p, t, &order, 0, &mut map, &mut used, &mut out);
    out.sort();
    out
}

pub fn embedding_count(p: &SiteGraph, t: &SiteGraph) -> usize {
    embeddings(p, t).len()
}

/// Number of automorphisms of a pattern.
pub fn automorphisms(p: &SiteGraph) -> usize {
    embedding_count(p, p).max(1)
}

/// Components of `p` structurally equal to `sp`.
pub fn occurrence_count(sp: &Species, p: &SiteGraph) -> usize {
    p.components()
        .iter()
        .filter(|c| c.len() == sp.graph().len() && canonical_text(&p.subgraph(c)) == sp.key())
        .count()
}
