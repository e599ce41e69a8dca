//! Model files.
//!
//! ```text
//! %agent: E(s)
//! %const: k1 0.5
//! %init: 10 E(s)
//! %obs: P P()
//! %obs: half @@ |P()| / 2
//! bind: E(s),S(e) <-> E(s!1),S(e!1) @ k1, 2.0
//! make: E(s!1),S(e!1) -> E(s),P() @ 1
//! mm: S(e) -> P() @@ 3 * #{S(e)} / (1 + #{S(e)})
//! ```
//!
//! `#` starts a comment unless followed by `{`.

use std::fmt;

use serde::Serialize;

use super::expr::{parse_number, Expr, ExprParser};
use super::rule::{validate_rule, RateLaw, Rule, RuleError};
use super::system::{KappaSystem, Observable, ObservableKind};
use crate::kappa::graph::SiteGraph;
use crate::kappa::signature::parse_agent_decl;
use crate::kappa::syntax::{check_licensed, parse_entries, Cursor};
use crate::kappa::{canonicalize_species, check_pattern, KappaError, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorCode {
    Io,
    Syntax,
    Signature,
    Pattern,
    Mixture,
    WellFormedness,
    Expression,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Io => "E001",
            ErrorCode::Syntax => "E101",
            ErrorCode::Signature => "E201",
            ErrorCode::Pattern => "E301",
            ErrorCode::Mixture => "E302",
            ErrorCode::WellFormedness => "E401",
            ErrorCode::Expression => "E501",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code} at {line}:{col}: {message}")]
pub struct ModelError {
    pub code: ErrorCode,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn code_of(e: &KappaError) -> ErrorCode {
    match e {
        KappaError::Syntax { .. } => ErrorCode::Syntax,
        KappaError::DuplicateAgent(_)
        | KappaError::DuplicateSiteDecl { .. }
        | KappaError::UnknownAgent(_)
        | KappaError::UnknownSite { .. }
        | KappaError::UnknownState { .. }
        | KappaError::NotBindable { .. } => ErrorCode::Signature,
        KappaError::RepeatedSite { .. } | KappaError::LabelOveruse { .. } | KappaError::DanglingBond(_) => ErrorCode::Pattern,
        KappaError::NotFullySpecified(_) | KappaError::NotConnected => ErrorCode::Mixture,
    }
}

struct Line<'a> {
    number: usize,
    /// 1-based column of `text` within the physical line.
    col: usize,
    text: &'a str,
}

impl Line<'_> {
    fn err(&self, code: ErrorCode, col: usize, message: impl Into<String>) -> ModelError {
        ModelError {
            code,
            line: self.number,
            col,
            message: message.into(),
        }
    }

    /// Attaches a location to a kappa error; syntax errors carry their own
    /// column, other errors point at `fallback`.
    fn kappa(&self, e: KappaError, fallback: usize) -> ModelError {
        let col = e.column().unwrap_or(fallback);
        self.err(code_of(&e), col, e.to_string())
    }
}

fn strip_comment(text: &str) -> &str {
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && bytes.get(i + 1) != Some(&b'{') {
            return &text[..i];
        }
    }
    text
}

fn lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = strip_comment(raw);
            let trimmed = body.trim_start();
            let col = body.len() - trimmed.len() + 1;
            let trimmed = trimmed.trim_end();
            (!trimmed.is_empty()).then_some(Line {
                number: i + 1,
                col,
                text: trimmed,
            })
        })
        .collect()
}

fn directive<'a>(text: &'a str, key: &str) -> Option<(&'a str, usize)> {
    let rest = text.strip_prefix(key)?;
    Some((rest, key.len()))
}

fn name_token(cur: &mut Cursor<'_>) -> Result<String, KappaError> {
    cur.skip_ws();
    if cur.peek() == Some('\'') {
        cur.bump();
        let mut out = String::new();
        loop {
            match cur.bump() {
                Some('\'') => return Ok(out),
                Some(c) => out.push(c),
                None => return Err(cur.error("unterminated quoted name")),
            }
        }
    }
    cur.ident()
}

pub fn parse_model(text: &str) -> Result<KappaSystem, ModelError> {
    let all = lines(text);
    let mut sys = KappaSystem::default();
    let mut sig = Signature::default();

    for line in &all {
        if let Some((rest, skip)) = directive(line.text, "%agent:") {
            let mut cur = Cursor::new(rest, line.col + skip);
            let (name, decl) = parse_agent_decl(&mut cur).map_err(|e| line.kappa(e, line.col))?;
            if !cur.at_end() {
                return Err(line.kappa(cur.error("trailing input after agent declaration"), line.col));
            }
            sig.insert(name, decl).map_err(|e| line.kappa(e, line.col))?;
        } else if let Some((rest, skip)) = directive(line.text, "%const:") {
            let mut cur = Cursor::new(rest, line.col + skip);
            let name = cur.ident().map_err(|e| line.kappa(e, line.col))?;
            let value = parse_number(&mut cur)
                .ok_or_else(|| line.kappa(cur.error("expected numeric constant value"), line.col))?;
            if !cur.at_end() {
                return Err(line.kappa(cur.error("trailing input after constant"), line.col));
            }
            if sys.constants.insert(name.clone(), value).is_some() {
                return Err(line.err(ErrorCode::Expression, line.col, format!("constant `{name}` defined twice")));
            }
        }
    }
    sys.signature = sig;

    for line in &all {
        if line.text.starts_with("%agent:") || line.text.starts_with("%const:") {
            continue;
        } else if let Some((rest, skip)) = directive(line.text, "%init:") {
            parse_init(&mut sys, line, rest, line.col + skip)?;
        } else if let Some((rest, skip)) = directive(line.text, "%obs:") {
            let obs = parse_obs(&sys, line, rest, line.col + skip)?;
            if sys.observables.iter().any(|o| o.name == obs.name) {
                return Err(line.err(ErrorCode::WellFormedness, line.col, format!("observable `{}` defined twice", obs.name)));
            }
            sys.observables.push(obs);
        } else if line.text.starts_with('%') {
            return Err(line.err(ErrorCode::Syntax, line.col, "unknown directive"));
        } else {
            for rule in parse_rule(&sys, line)? {
                if sys.rule(&rule.name).is_some() {
                    return Err(line.err(ErrorCode::WellFormedness, line.col, format!("rule `{}` defined twice", rule.name)));
                }
                sys.rules.push(rule);
            }
        }
    }
    Ok(sys)
}

fn parse_init(sys: &mut KappaSystem, line: &Line<'_>, rest: &str, col: usize) -> Result<(), ModelError> {
    let mut cur = Cursor::new(rest, col);
    cur.skip_ws();
    let count = cur
        .uint()
        .ok_or_else(|| line.kappa(cur.error("expected a non-negative integer count"), col))?;
    let at = cur.col();
    let expr = parse_entries(&mut cur).map_err(|e| line.kappa(e, at))?;
    if !cur.at_end() {
        return Err(line.kappa(cur.error("trailing input after initial mixture"), col));
    }
    check_pattern(&expr, &sys.signature).map_err(|e| line.kappa(e, at))?;
    let g = SiteGraph::from_expression(&expr).map_err(|e| line.kappa(e, at))?;
    g.check_fully_specified(&sys.signature).map_err(|e| line.kappa(e, at))?;
    if g.is_empty() {
        return Err(line.err(ErrorCode::Mixture, at, "empty initial mixture"));
    }
    for c in g.components() {
        let sp = canonicalize_species(&g.subgraph(&c), &sys.signature).map_err(|e| line.kappa(e, at))?;
        *sys.init.entry(sp).or_insert(0) += count;
    }
    Ok(())
}

fn parse_obs(sys: &KappaSystem, line: &Line<'_>, rest: &str, col: usize) -> Result<Observable, ModelError> {
    let mut cur = Cursor::new(rest, col);
    let name = name_token(&mut cur).map_err(|e| line.kappa(e, col))?;
    let at = cur.col();
    let kind = if cur.eat_str("@@") {
        let e = ExprParser { sig: &sys.signature }
            .parse(&mut cur)
            .map_err(|e| line.kappa(e, at))?;
        check_constants(&e, sys, line, at)?;
        ObservableKind::Closed(e)
    } else {
        let expr = parse_entries(&mut cur).map_err(|e| line.kappa(e, at))?;
        check_licensed(&expr, &sys.signature).map_err(|e| line.kappa(e, at))?;
        check_pattern(&expr, &sys.signature).map_err(|e| line.kappa(e, at))?;
        let g = SiteGraph::from_expression(&expr).map_err(|e| line.kappa(e, at))?;
        if !g.is_connected() {
            return Err(line.err(ErrorCode::Pattern, at, "observable pattern must be connected"));
        }
        ObservableKind::Pattern(g)
    };
    if !cur.at_end() {
        return Err(line.kappa(cur.error("trailing input after observable"), col));
    }
    Ok(Observable { name, kind })
}

fn check_constants(e: &Expr, sys: &KappaSystem, line: &Line<'_>, col: usize) -> Result<(), ModelError> {
    match e.const_refs().into_iter().find(|c| !sys.constants.contains_key(c)) {
        Some(c) => Err(line.err(ErrorCode::Expression, col, format!("unknown constant `{c}`"))),
        None => Ok(()),
    }
}

fn rate_value(sys: &KappaSystem, line: &Line<'_>, cur: &mut Cursor<'_>) -> Result<f64, ModelError> {
    let at = cur.col();
    if let Some(v) = parse_number(cur) {
        return Ok(v);
    }
    let name = cur.ident().map_err(|e| line.kappa(e, at))?;
    sys.constants
        .get(&name)
        .copied()
        .ok_or_else(|| line.err(ErrorCode::Expression, at, format!("unknown constant `{name}`")))
}

fn parse_rule(sys: &KappaSystem, line: &Line<'_>) -> Result<Vec<Rule>, ModelError> {
    let sig = &sys.signature;
    let mut cur = Cursor::new(line.text, line.col);
    let start = cur.mark();
    let name = match name_token(&mut cur) {
        Ok(n) if cur.eat(':') => n,
        _ => {
            cur.reset(start);
            format!("r{}", line.number)
        }
    };
    let lcol = cur.col();
    let lhs = parse_entries(&mut cur).map_err(|e| line.kappa(e, lcol))?;
    let reversible = if cur.eat_str("<->") {
        true
    } else if cur.eat_str("->") {
        false
    } else {
        return Err(line.kappa(cur.error("expected `->` or `<->`"), lcol));
    };
    let rcol = cur.col();
    let rhs = parse_entries(&mut cur).map_err(|e| line.kappa(e, rcol))?;
    for (e, c) in [(&lhs, lcol), (&rhs, rcol)] {
        check_pattern(e, sig).map_err(|err| line.kappa(err, c))?;
    }
    let rate_col = cur.col();
    let (fwd, rev) = if cur.eat_str("@@") {
        if reversible {
            return Err(line.err(ErrorCode::Syntax, rate_col, "reversible rules take `@ k+, k-`"));
        }
        let at = cur.col();
        let e = ExprParser { sig }.parse(&mut cur).map_err(|e| line.kappa(e, at))?;
        if !e.patterns().is_empty() {
            return Err(line.err(ErrorCode::Expression, at, "pattern counts are only allowed in observables"));
        }
        check_constants(&e, sys, line, at)?;
        (RateLaw::Closed(e), None)
    } else if cur.eat('@') {
        let k = rate_value(sys, line, &mut cur)?;
        let back = if reversible {
            if !cur.eat(',') {
                return Err(line.kappa(cur.error("reversible rule needs two rates"), rate_col));
            }
            Some(RateLaw::MassAction(rate_value(sys, line, &mut cur)?))
        } else {
            None
        };
        (RateLaw::MassAction(k), back)
    } else {
        return Err(line.kappa(cur.error("expected `@` or `@@`"), rate_col));
    };
    if !cur.at_end() {
        return Err(line.kappa(cur.error("trailing input after rate"), rate_col));
    }
    for law in std::iter::once(&fwd).chain(rev.as_ref()) {
        if let RateLaw::MassAction(v) = law {
            if *v < 0.0 || !v.is_finite() {
                return Err(line.err(ErrorCode::Expression, rate_col, "rates must be finite and non-negative"));
            }
        }
    }
    let mut out = Vec::new();
    if let Some(back) = rev {
        out.push(Rule::from_expressions(format!("{name}_fwd"), &lhs, &rhs, fwd).map_err(|e| line.kappa(e, lcol))?);
        out.push(Rule::from_expressions(format!("{name}_rev"), &rhs, &lhs, back).map_err(|e| line.kappa(e, lcol))?);
    } else {
        out.push(Rule::from_expressions(name, &lhs, &rhs, fwd).map_err(|e| line.kappa(e, lcol))?);
    }
    for r in &out {
        validate_rule(r, sig).map_err(|e| match e {
            RuleError::Kappa(k) => line.kappa(k, lcol),
            other => line.err(ErrorCode::WellFormedness, lcol, format!("rule `{}`: {other}", r.name)),
        })?;
    }
    Ok(out)
}

/// Concrete syntax accepted by [`parse_model`].
pub fn print_model(sys: &KappaSystem) -> String {
    let mut out = String::new();
    for d in sys.signature.declarations() {
        out.push_str(&d);
        out.push('\n');
    }
    for (name, v) in &sys.constants {
        out.push_str(&format!("%const: {name} {v}\n"));
    }
    for (sp, n) in &sys.init {
        out.push_str(&format!("%init: {n} {sp}\n"));
    }
    for o in &sys.observables {
        match &o.kind {
            ObservableKind::Pattern(p) => out.push_str(&format!("%obs: {} {p}\n", quote(&o.name))),
            ObservableKind::Closed(e) => out.push_str(&format!("%obs: {} @@ {e}\n", quote(&o.name))),
        }
    }
    for r in &sys.rules {
        let (l, x) = r.sides_text();
        out.push_str(&format!("{}: {l} -> {x} {}\n", quote(&r.name), r.rate));
    }
    out
}

fn quote(name: &str) -> String {
    let plain = name.chars().next().is_some_and(crate::kappa::syntax::is_ident_start)
        && name.chars().all(crate::kappa::syntax::is_ident_char);
    if plain {
        name.to_string()
    } else {
        format!("'{name}'")
    }
}
