//! Concrete syntax for Kappa expressions.
//!
//! Agents are written `Name(site~state!label,...)`, `!_` marks a wildcard
//! bond and `.` is the fictitious agent. A positive integer in front of an
//! agent (`10 CI(ci,or)`) repeats it.

use std::collections::BTreeMap;
use std::fmt;

use super::signature::Signature;
use super::KappaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binding {
    Free,
    Wildcard,
    Label(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Site {
    pub name: String,
    pub internal: Option<String>,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Agent {
    pub name: String,
    pub sites: Vec<Site>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    Agent(Agent),
    Fictitious,
}

/// An ordered list of agents as written. Label bookkeeping is explicit, so
/// dangling bonds can exist until [`normalize`] erases them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Expression {
    pub entries: Vec<Entry>,
}

impl Expression {
    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Agent(a) => Some(a),
            Entry::Fictitious => None,
        })
    }

    /// Number of occurrences of every binding label.
    pub fn label_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for a in self.agents() {
            for s in &a.sites {
                if let Binding::Label(l) = s.binding {
                    *counts.entry(l).or_insert(0) += 1;
                }
            }
        }
        counts
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some(v) = &self.internal {
            write!(f, "~{v}")?;
        }
        match self.binding {
            Binding::Free => Ok(()),
            Binding::Wildcard => write!(f, "!_"),
            Binding::Label(l) => write!(f, "!{l}"),
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Agent(a) => write!(f, "{a}"),
            Entry::Fictitious => write!(f, "."),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, ".");
        }
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Byte-oriented cursor shared by the expression, signature and rate-law
/// parsers. Columns are 1-based character offsets into the parsed text.
pub(crate) struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    base_col: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str, base_col: usize) -> Self {
        Cursor {
            text,
            pos: 0,
            base_col,
        }
    }

    pub(crate) fn col(&self) -> usize {
        self.base_col + self.text[..self.pos].chars().count()
    }

    pub(crate) fn mark(&self) -> usize {
        self.pos
    }

    pub(crate) fn reset(&mut self, mark: usize) {
        self.pos = mark;
    }

    pub(crate) fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub(crate) fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> KappaError {
        KappaError::Syntax {
            col: self.col(),
            msg: msg.into(),
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, KappaError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if is_ident_start(c) => {}
            Some(c) => return Err(self.error(format!("expected identifier, found `{c}`"))),
            None => return Err(self.error("expected identifier, found end of input")),
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_char(c)) {
            self.bump();
        }
        Ok(self.text[start..self.pos].to_string())
    }

    /// Internal-state tokens may start with a digit (`~0`).
    pub(crate) fn state_token(&mut self) -> Result<String, KappaError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_char(c)) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.error("expected internal state after `~`"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    pub(crate) fn uint(&mut self) -> Option<u64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return None;
        }
        self.text[start..self.pos].parse().ok()
    }
}

fn parse_site(cur: &mut Cursor<'_>) -> Result<Site, KappaError> {
    let name = cur.ident()?;
    let mut internal = None;
    let mut binding = Binding::Free;
    loop {
        if cur.peek() == Some('~') {
            cur.bump();
            if internal.is_some() {
                return Err(cur.error(format!("site `{name}` has two internal states")));
            }
            internal = Some(cur.state_token()?);
        } else if cur.peek() == Some('!') {
            cur.bump();
            if binding != Binding::Free {
                return Err(cur.error(format!("site `{name}` has two binding states")));
            }
            if cur.peek() == Some('_') {
                cur.bump();
                binding = Binding::Wildcard;
            } else {
                match cur.uint() {
                    Some(l) if l > 0 && l <= u32::MAX as u64 => binding = Binding::Label(l as u32),
                    _ => return Err(cur.error("expected positive bond label or `_` after `!`")),
                }
            }
        } else {
            break;
        }
    }
    Ok(Site {
        name,
        internal,
        binding,
    })
}

pub(crate) fn parse_agent(cur: &mut Cursor<'_>) -> Result<Agent, KappaError> {
    let name = cur.ident()?;
    let mut sites = Vec::new();
    if cur.eat('(') {
        if !cur.eat(')') {
            loop {
                cur.skip_ws();
                sites.push(parse_site(cur)?);
                if cur.eat(')') {
                    break;
                }
                if !cur.eat(',') {
                    return Err(cur.error("expected `,` or `)` in interface"));
                }
            }
        }
    }
    Ok(Agent { name, sites })
}

/// Parses an expression without consulting a signature. The cursor stops at
/// the first character that cannot continue the expression.
pub(crate) fn parse_entries(cur: &mut Cursor<'_>) -> Result<Expression, KappaError> {
    let mut entries = Vec::new();
    cur.skip_ws();
    let starts_item = |c: Option<char>| matches!(c, Some(c) if is_ident_start(c) || c == '.' || c.is_ascii_digit());
    if !starts_item(cur.peek()) {
        return Ok(Expression { entries });
    }
    loop {
        cur.skip_ws();
        if cur.peek() == Some('.') {
            cur.bump();
            entries.push(Entry::Fictitious);
        } else if matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            let n = cur.uint().unwrap_or(0);
            if n == 0 {
                return Err(cur.error("agent multiplicity must be positive"));
            }
            let agent = parse_agent(cur)?;
            if n > 1 && agent.sites.iter().any(|s| matches!(s.binding, Binding::Label(_))) {
                return Err(cur.error("repeated agent cannot carry bond labels"));
            }
            for _ in 0..n {
                entries.push(Entry::Agent(agent.clone()));
            }
        } else {
            entries.push(Entry::Agent(parse_agent(cur)?));
        }
        let save = cur.pos;
        if cur.eat(',') {
            cur.skip_ws();
            if starts_item(cur.peek()) {
                continue;
            }
            cur.pos = save;
        }
        break;
    }
    Ok(Expression { entries })
}

/// Checks every agent, site and internal state against `sig`, rejects sites
/// repeated within an interface and labels used more than twice.
pub fn check_licensed(e: &Expression, sig: &Signature) -> Result<(), KappaError> {
    for a in e.agents() {
        let decl = sig.agent(&a.name).ok_or_else(|| KappaError::UnknownAgent(a.name.clone()))?;
        let mut seen = std::collections::BTreeSet::new();
        for s in &a.sites {
            if !seen.insert(s.name.as_str()) {
                return Err(KappaError::RepeatedSite {
                    agent: a.name.clone(),
                    site: s.name.clone(),
                });
            }
            let site = decl.sites.get(&s.name).ok_or_else(|| KappaError::UnknownSite {
                agent: a.name.clone(),
                site: s.name.clone(),
            })?;
            if let Some(v) = &s.internal {
                if !site.internal_values.contains(v) {
                    return Err(KappaError::UnknownState {
                        agent: a.name.clone(),
                        site: s.name.clone(),
                        state: v.clone(),
                    });
                }
            }
            if s.binding != Binding::Free && !site.binding {
                return Err(KappaError::NotBindable {
                    agent: a.name.clone(),
                    site: s.name.clone(),
                });
            }
        }
    }
    for (label, n) in e.label_counts() {
        if n > 2 {
            return Err(KappaError::LabelOveruse { label, count: n });
        }
    }
    Ok(())
}

pub fn parse_expression(text: &str, sig: &Signature) -> Result<Expression, KappaError> {
    let mut cur = Cursor::new(text, 1);
    let e = parse_entries(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error(format!("unexpected `{}`", cur.peek().unwrap_or(' '))));
    }
    check_licensed(&e, sig)?;
    Ok(e)
}

/// Removes fictitious agents, erases dangling labels and renames the
/// remaining labels densely in order of first occurrence.
pub fn normalize(e: &Expression) -> Expression {
    let counts = e.label_counts();
    let mut rename: BTreeMap<u32, u32> = BTreeMap::new();
    let mut entries = Vec::new();
    for a in e.agents() {
        let sites = a
            .sites
            .iter()
            .map(|s| {
                let binding = match s.binding {
                    Binding::Label(l) if counts[&l] < 2 => Binding::Free,
                    Binding::Label(l) => {
                        let next = rename.len() as u32 + 1;
                        Binding::Label(*rename.entry(l).or_insert(next))
                    }
                    b => b,
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

/// `e1 ≡ e2` up to site order, agent order, fictitious agents, label
/// renaming and dangling-bond removal.
pub fn structurally_equal(e1: &Expression, e2: &Expression) -> bool {
    let g1 = super::graph::SiteGraph::from_expression(&normalize(e1));
    let g2 = super::graph::SiteGraph::from_expression(&normalize(e2));
    match (g1, g2) {
        (Ok(g1), Ok(g2)) => {
            g1.agents.len() == g2.agents.len()
                && super::canon::canonical_text(&g1) == super::canon::canonical_text(&g2)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::signature::parse_signature;

    fn sig() -> Signature {
        parse_signature(
            "%agent: A(x,y,z)\n%agent: B(y)\n%agent: E(s)\n%agent: S(e)\n%agent: M(d~u~p,b)",
        )
        .unwrap()
    }

    fn p(text: &str) -> Expression {
        parse_expression(text, &sig()).unwrap()
    }

    #[test]
    fn parses_bonded_pair() {
        let e = p("E(s!1),S(e!1)");
        assert_eq!(e.entries.len(), 2);
        assert_eq!(e.label_counts().get(&1), Some(&2));
    }

    #[test]
    fn parses_wildcard() {
        let e = p("A(x!_)");
        let a = e.agents().next().unwrap();
        assert_eq!(a.sites[0].binding, Binding::Wildcard);
    }

    #[test]
    fn dangling_bond_is_a_valid_expression() {
        let e = p("A(x!1)");
        assert_eq!(e.label_counts().get(&1), Some(&1));
    }

    #[test]
    fn repetition_prefix() {
        let e = p("E(s), 3 B(y)");
        assert_eq!(e.entries.len(), 4);
        assert!(parse_expression("2 A(x!1)", &sig()).is_err());
    }

    #[test]
    fn rejects_unlicensed() {
        assert!(matches!(
            parse_expression("Q(x)", &sig()),
            Err(KappaError::UnknownAgent(_))
        ));
        assert!(matches!(
            parse_expression("A(w)", &sig()),
            Err(KappaError::UnknownSite { .. })
        ));
        assert!(matches!(
            parse_expression("M(d~q)", &sig()),
            Err(KappaError::UnknownState { .. })
        ));
        assert!(matches!(
            parse_expression("A(x,x)", &sig()),
            Err(KappaError::RepeatedSite { .. })
        ));
        assert!(matches!(
            parse_expression("A(x!1,y!1,z!1)", &sig()),
            Err(KappaError::LabelOveruse { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let e = Expression {
            entries: vec![Entry::Fictitious, p("A(x)").entries[0].clone()],
        };
        assert_eq!(normalize(&e).to_string(), "A(x)");
        assert_eq!(normalize(&p("A(x!7),B(y!7)")).to_string(), "A(x!1),B(y!1)");
        assert_eq!(normalize(&p("A(x!3)")).to_string(), "A(x)");
    }

    #[test]
    fn structural_equality_examples() {
        assert!(structurally_equal(&p("A(x,y)"), &p("A(y,x)")));
        assert!(structurally_equal(&p("A(x!1),B(y!1)"), &p("B(y!2),A(x!2)")));
        assert!(!structurally_equal(&p("A(x!1),B(y!1)"), &p("A(x),B(y)")));
        assert!(structurally_equal(&p("A(x!4),.,B(y)"), &p("B(y),A(x)")));
    }

    #[test]
    fn display_round_trips() {
        let text = "M(d~u,b!1),M(d~p,b!1),.";
        let e = p(text);
        assert_eq!(e.to_string(), text);
        assert_eq!(p(&e.to_string()), e);
    }
}
