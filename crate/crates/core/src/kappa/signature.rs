use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::syntax::Cursor;
use super::KappaError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SiteDecl {
    /// Empty when the site carries no internal state.
    pub internal_values: BTreeSet<String>,
    pub binding: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AgentDecl {
    pub sites: BTreeMap<String, SiteDecl>,
}

impl AgentDecl {
    pub fn all_sites(&self) -> impl Iterator<Item = &str> {
        self.sites.keys().map(String::as_str)
    }

    pub fn internal_sites(&self) -> impl Iterator<Item = &str> {
        self.sites
            .iter()
            .filter(|(_, d)| !d.internal_values.is_empty())
            .map(|(n, _)| n.as_str())
    }

    pub fn binding_sites(&self) -> impl Iterator<Item = &str> {
        self.sites.iter().filter(|(_, d)| d.binding).map(|(n, _)| n.as_str())
    }
}

/// Agent names with their interfaces. Every declared site may bind; sites
/// declared with `~` values additionally carry an internal state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Signature {
    agents: BTreeMap<String, AgentDecl>,
}

impl Signature {
    pub fn agent(&self, name: &str) -> Option<&AgentDecl> {
        self.agents.get(name)
    }

    pub fn agents(&self) -> impl Iterator<Item = (&str, &AgentDecl)> {
        self.agents.iter().map(|(n, d)| (n.as_str(), d))
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, decl: AgentDecl) -> Result<(), KappaError> {
        let name = name.into();
        if self.agents.contains_key(&name) {
            return Err(KappaError::DuplicateAgent(name));
        }
        self.agents.insert(name, decl);
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Option<AgentDecl> {
        self.agents.remove(name)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.agents.retain(|n, _| keep(n));
    }

    /// One `%agent:` line per agent, in name order.
    pub fn declarations(&self) -> Vec<String> {
        self.agents
            .iter()
            .map(|(n, d)| format!("%agent: {}", format_decl(n, d)))
            .collect()
    }
}

fn format_decl(name: &str, decl: &AgentDecl) -> String {
    let sites: Vec<String> = decl
        .sites
        .iter()
        .map(|(s, d)| {
            let mut out = s.clone();
            for v in &d.internal_values {
                out.push('~');
                out.push_str(v);
            }
            out
        })
        .collect();
    format!("{name}({})", sites.join(","))
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.declarations() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Parses one declaration body `Name(site~v1~v2,site)` at the cursor.
pub(crate) fn parse_agent_decl(cur: &mut Cursor<'_>) -> Result<(String, AgentDecl), KappaError> {
    let name = cur.ident()?;
    let mut decl = AgentDecl::default();
    if cur.eat('(') && !cur.eat(')') {
        loop {
            let site = cur.ident()?;
            let mut sd = SiteDecl {
                binding: true,
                ..SiteDecl::default()
            };
            while cur.peek() == Some('~') {
                cur.bump();
                let v = cur.state_token()?;
                if !sd.internal_values.insert(v.clone()) {
                    return Err(cur.error(format!("internal state `{v}` declared twice on `{site}`")));
                }
            }
            if decl.sites.insert(site.clone(), sd).is_some() {
                return Err(KappaError::DuplicateSiteDecl { agent: name, site });
            }
            if cur.eat(')') {
                break;
            }
            if !cur.eat(',') {
                return Err(cur.error("expected `,` or `)` in agent declaration"));
            }
        }
    }
    Ok((name, decl))
}

/// Parses any number of `%agent:` declarations. The result does not depend
/// on declaration order.
pub fn parse_signature(text: &str) -> Result<Signature, KappaError> {
    let mut sig = Signature::default();
    let mut cur = Cursor::new(text, 1);
    while !cur.at_end() {
        if !cur.eat_str("%agent:") {
            return Err(cur.error("expected `%agent:`"));
        }
        let (name, decl) = parse_agent_decl(&mut cur)?;
        sig.insert(name, decl)?;
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_binding_site() {
        let sig = parse_signature("%agent: T(op)").unwrap();
        let t = sig.agent("T").unwrap();
        assert_eq!(t.all_sites().collect::<Vec<_>>(), vec!["op"]);
        assert_eq!(t.binding_sites().collect::<Vec<_>>(), vec!["op"]);
        assert_eq!(t.internal_sites().count(), 0);
    }

    #[test]
    fn internal_values() {
        let sig = parse_signature("%agent: M(d~u~p,b)").unwrap();
        let m = sig.agent("M").unwrap();
        assert_eq!(m.internal_sites().collect::<Vec<_>>(), vec!["d"]);
        let vals: Vec<_> = m.sites["d"].internal_values.iter().cloned().collect();
        assert_eq!(vals, vec!["p".to_string(), "u".to_string()]);
        assert!(m.sites.contains_key("b"));
    }

    #[test]
    fn duplicate_agent_rejected() {
        assert!(matches!(
            parse_signature("%agent: A(x) %agent: A(y)"),
            Err(KappaError::DuplicateAgent(_))
        ));
    }

    #[test]
    fn duplicate_site_rejected() {
        assert!(matches!(
            parse_signature("%agent: A(x,x)"),
            Err(KappaError::DuplicateSiteDecl { .. })
        ));
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse_signature("%agent: A(x,").is_err());
        assert!(parse_signature("agent: A(x)").is_err());
        assert!(parse_signature("%agent: A(x~)").is_err());
    }

    #[test]
    fn order_independent() {
        let a = parse_signature("%agent: A(x)\n%agent: B(y~0~1)").unwrap();
        let b = parse_signature("%agent: B(y~1~0)\n%agent: A(x)").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_signature(&a.to_string()).unwrap(), a);
    }
}
