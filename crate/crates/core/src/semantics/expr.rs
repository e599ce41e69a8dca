//! Closed-form rate-law and observable expressions.
//!
//! Grammar: numbers, constant names, `#{species}` copy-number variables,
//! `|pattern|` pattern counts, `sqrt(..)`, `+ - * /`, unary minus and
//! parentheses.

use std::collections::BTreeSet;
use std::fmt;

use crate::kappa::graph::SiteGraph;
use crate::kappa::syntax::{check_licensed, parse_entries, Cursor};
use crate::kappa::{canonicalize_species, check_pattern, KappaError, Signature};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(String),
    /// Copy number of the species with this canonical key.
    Species(String),
    /// Number of occurrences of a connected pattern.
    Count(SiteGraph),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn constant(name: impl Into<String>) -> Expr {
        Expr::Const(name.into())
    }

    pub fn species(key: impl Into<String>) -> Expr {
        Expr::Species(key.into())
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    /// `C(x, n)` written as a product, `1` for `n = 0`.
    pub fn binomial(x: Expr, n: u32) -> Expr {
        if n == 0 {
            return Expr::Num(1.0);
        }
        let mut acc = x.clone();
        for t in 1..n {
            acc = acc * (x.clone() - Expr::Num(t as f64));
        }
        let fact: f64 = (1..=n).map(f64::from).product();
        if fact == 1.0 {
            acc
        } else {
            acc / Expr::Num(fact)
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        factors
            .into_iter()
            .reduce(|a, b| a * b)
            .unwrap_or(Expr::Num(1.0))
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms
            .into_iter()
            .reduce(|a, b| a + b)
            .unwrap_or(Expr::Num(0.0))
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Species(_) | Expr::Count(_) => vec![],
            Expr::Neg(a) | Expr::Sqrt(a) => vec![a],
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => vec![a, b],
        }
    }

    pub fn species_refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Species(k) = e {
                out.insert(k.clone());
            }
        });
        out
    }

    pub fn const_refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Const(k) = e {
                out.insert(k.clone());
            }
        });
        out
    }

    pub fn patterns(&self) -> Vec<&SiteGraph> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a SiteGraph>) {
            if let Expr::Count(p) = e {
                out.push(p);
            }
            for c in e.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Rebuilds the tree bottom-up, letting `f` replace leaves.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        let bx = |e: Expr| Box::new(e);
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Species(_) | Expr::Count(_) => f(self).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(bx(a.map_leaves(f))),
            Expr::Sqrt(a) => Expr::Sqrt(bx(a.map_leaves(f))),
            Expr::Add(a, b) => Expr::Add(bx(a.map_leaves(f)), bx(b.map_leaves(f))),
            Expr::Sub(a, b) => Expr::Sub(bx(a.map_leaves(f)), bx(b.map_leaves(f))),
            Expr::Mul(a, b) => Expr::Mul(bx(a.map_leaves(f)), bx(b.map_leaves(f))),
            Expr::Div(a, b) => Expr::Div(bx(a.map_leaves(f)), bx(b.map_leaves(f))),
        }
    }

    pub fn substitute_species(&self, key: &str, by: &Expr) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Species(k) if k == key => Some(by.clone()),
            _ => None,
        })
    }

    /// Constant folding and removal of neutral elements.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        match self {
            Neg(a) => match a.simplify() {
                Num(v) => Num(-v),
                Neg(inner) => *inner,
                s => Neg(Box::new(s)),
            },
            Sqrt(a) => match a.simplify() {
                Num(v) if v >= 0.0 => Num(v.sqrt()),
                s => Sqrt(Box::new(s)),
            },
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x + y),
                (Num(z), e) | (e, Num(z)) if z == 0.0 => e,
                (x, y) => x + y,
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x - y),
                (e, Num(z)) if z == 0.0 => e,
                (x, y) => x - y,
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x * y),
                (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
                (Num(o), e) | (e, Num(o)) if o == 1.0 => e,
                (x, y) => x * y,
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) if y != 0.0 => Num(x / y),
                (Num(z), _) if z == 0.0 => Num(0.0),
                (e, Num(o)) if o == 1.0 => e,
                (x, y) => x / y,
            },
            e => e.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.simplify(), Expr::Num(v) if v == 0.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 4,
        }
    }

    /// Evaluates with caller-supplied lookups for constants, species and
    /// pattern counts.
    pub fn eval_with(
        &self,
        constant: &dyn Fn(&str) -> Option<f64>,
        species: &dyn Fn(&str) -> f64,
        count: &dyn Fn(&SiteGraph) -> f64,
    ) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => constant(c).ok_or_else(|| ExprError::UnknownConstant(c.clone()))?,
            Expr::Species(k) => species(k),
            Expr::Count(p) => count(p),
            Expr::Neg(a) => -a.eval_with(constant, species, count)?,
            Expr::Sqrt(a) => a.eval_with(constant, species, count)?.sqrt(),
            Expr::Add(a, b) => a.eval_with(constant, species, count)? + b.eval_with(constant, species, count)?,
            Expr::Sub(a, b) => a.eval_with(constant, species, count)? - b.eval_with(constant, species, count)?,
            Expr::Mul(a, b) => a.eval_with(constant, species, count)? * b.eval_with(constant, species, count)?,
            Expr::Div(a, b) => a.eval_with(constant, species, count)? / b.eval_with(constant, species, count)?,
        })
    }

    /// Resolves constants to numbers and species/pattern terms to state
    /// indices or weighted sums.
    pub fn compile(
        &self,
        constant: &dyn Fn(&str) -> Option<f64>,
        species: &dyn Fn(&str) -> Option<usize>,
        count: &dyn Fn(&SiteGraph) -> Vec<(usize, f64)>,
    ) -> Result<Compiled, ExprError> {
        let bx = Box::new;
        Ok(match self {
            Expr::Num(v) => Compiled::Num(*v),
            Expr::Const(c) => Compiled::Num(constant(c).ok_or_else(|| ExprError::UnknownConstant(c.clone()))?),
            Expr::Species(k) => match species(k) {
                Some(i) => Compiled::Var(i),
                None => Compiled::Num(0.0),
            },
            Expr::Count(p) => Compiled::Linear(count(p)),
            Expr::Neg(a) => Compiled::Neg(bx(a.compile(constant, species, count)?)),
            Expr::Sqrt(a) => Compiled::Sqrt(bx(a.compile(constant, species, count)?)),
            Expr::Add(a, b) => Compiled::Add(bx(a.compile(constant, species, count)?), bx(b.compile(constant, species, count)?)),
            Expr::Sub(a, b) => Compiled::Sub(bx(a.compile(constant, species, count)?), bx(b.compile(constant, species, count)?)),
            Expr::Mul(a, b) => Compiled::Mul(bx(a.compile(constant, species, count)?), bx(b.compile(constant, species, count)?)),
            Expr::Div(a, b) => Compiled::Div(bx(a.compile(constant, species, count)?), bx(b.compile(constant, species, count)?)),
        })
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 {
        write!(f, "(-{})", -v)
    } else {
        write!(f, "{v}")
    }
}

fn fmt_child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(*v, f),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Species(k) => write!(f, "#{{{k}}}"),
            Expr::Count(p) => write!(f, "|{p}|"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                fmt_child(a, 4, f)
            }
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Add(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, " + ")?;
                fmt_child(b, 2, f)
            }
            Expr::Sub(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, " - ")?;
                fmt_child(b, 2, f)
            }
            Expr::Mul(a, b) => {
                fmt_child(a, 2, f)?;
                write!(f, " * ")?;
                fmt_child(b, 3, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, 2, f)?;
                write!(f, " / ")?;
                fmt_child(b, 3, f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
}

/// An expression bound to a reaction network's species indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Compiled {
    Num(f64),
    Var(usize),
    Linear(Vec<(usize, f64)>),
    Neg(Box<Compiled>),
    Add(Box<Compiled>, Box<Compiled>),
    Sub(Box<Compiled>, Box<Compiled>),
    Mul(Box<Compiled>, Box<Compiled>),
    Div(Box<Compiled>, Box<Compiled>),
    Sqrt(Box<Compiled>),
}

impl Compiled {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Compiled::Num(v) => *v,
            Compiled::Var(i) => x[*i],
            Compiled::Linear(terms) => terms.iter().map(|&(i, w)| w * x[i]).sum(),
            Compiled::Neg(a) => -a.eval(x),
            Compiled::Add(a, b) => a.eval(x) + b.eval(x),
            Compiled::Sub(a, b) => a.eval(x) - b.eval(x),
            Compiled::Mul(a, b) => a.eval(x) * b.eval(x),
            Compiled::Div(a, b) => a.eval(x) / b.eval(x),
            Compiled::Sqrt(a) => a.eval(x).sqrt(),
        }
    }

    /// Species indices read by the expression.
    pub fn dependencies(&self, out: &mut BTreeSet<usize>) {
        match self {
            Compiled::Num(_) => {}
            Compiled::Var(i) => {
                out.insert(*i);
            }
            Compiled::Linear(t) => out.extend(t.iter().map(|&(i, _)| i)),
            Compiled::Neg(a) | Compiled::Sqrt(a) => a.dependencies(out),
            Compiled::Add(a, b) | Compiled::Sub(a, b) | Compiled::Mul(a, b) | Compiled::Div(a, b) => {
                a.dependencies(out);
                b.dependencies(out);
            }
        }
    }
}

pub(crate) fn parse_number(cur: &mut Cursor<'_>) -> Option<f64> {
    cur.skip_ws();
    let rest = cur.rest();
    let mut end = 0;
    let bytes = rest.as_bytes();
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        end += 1;
    }
    if end == 0 || !bytes[..end].iter().any(u8::is_ascii_digit) {
        return None;
    }
    if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
        let mut e = end + 1;
        if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
            e += 1;
        }
        let digits = e;
        while e < bytes.len() && bytes[e].is_ascii_digit() {
            e += 1;
        }
        if e > digits {
            end = e;
        }
    }
    let v = rest[..end].parse().ok()?;
    for _ in 0..rest[..end].chars().count() {
        cur.bump();
    }
    Some(v)
}

/// Expression parser over a shared cursor.
pub(crate) struct ExprParser<'s> {
    pub sig: &'s Signature,
}

impl ExprParser<'_> {
    pub(crate) fn parse(&self, cur: &mut Cursor<'_>) -> Result<Expr, KappaError> {
        self.sum(cur)
    }

    fn sum(&self, cur: &mut Cursor<'_>) -> Result<Expr, KappaError> {
        let mut acc = self.term(cur)?;
        loop {
            if cur.eat('+') {
                acc = acc + self.term(cur)?;
            } else if cur.eat('-') {
                acc = acc - self.term(cur)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&self, cur: &mut Cursor<'_>) -> Result<Expr, KappaError> {
        let mut acc = self.unary(cur)?;
        loop {
            if cur.eat('*') {
                acc = acc * self.unary(cur)?;
            } else if cur.eat('/') {
                acc = acc / self.unary(cur)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&self, cur: &mut Cursor<'_>) -> Result<Expr, KappaError> {
        if cur.eat('-') {
            let inner = self.unary(cur)?;
            return Ok(match inner {
                Expr::Num(v) => Expr::Num(-v),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.atom(cur)
    }

    fn atom(&self, cur: &mut Cursor<'_>) -> Result<Expr, KappaError> {
        cur.skip_ws();
        if cur.eat('(') {
            let e = self.sum(cur)?;
            if !cur.eat(')') {
                return Err(cur.error("expected `)`"));
            }
            return Ok(e);
        }
        if cur.eat_str("#{") {
            let expr = parse_entries(cur)?;
            if !cur.eat('}') {
                return Err(cur.error("expected `}` closing species variable"));
            }
            check_pattern(&expr, self.sig)?;
            let g = SiteGraph::from_expression(&expr)?;
            let sp = canonicalize_species(&g, self.sig)?;
            return Ok(Expr::Species(sp.key().to_string()));
        }
        if cur.eat('|') {
            let expr = parse_entries(cur)?;
            if !cur.eat('|') {
                return Err(cur.error("expected `|` closing pattern count"));
            }
            check_licensed(&expr, self.sig)?;
            check_pattern(&expr, self.sig)?;
            let g = SiteGraph::from_expression(&expr)?;
            return Ok(Expr::Count(g));
        }
        if let Some(v) = parse_number(cur) {
            return Ok(Expr::Num(v));
        }
        let name = cur.ident()?;
        if name == "sqrt" && cur.eat('(') {
            let e = self.sum(cur)?;
            if !cur.eat(')') {
                return Err(cur.error("expected `)` after sqrt argument"));
            }
            return Ok(e.sqrt());
        }
        Ok(Expr::Const(name))
    }
}

pub fn parse_expr(text: &str, sig: &Signature) -> Result<Expr, KappaError> {
    let mut cur = Cursor::new(text, 1);
    let e = ExprParser { sig }.parse(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after expression"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::parse_signature;

    fn sig() -> Signature {
        parse_signature("%agent: S(e)\n%agent: M(b)").unwrap()
    }

    fn consts(name: &str) -> Option<f64> {
        match name {
            "k3" => Some(1.0),
            "ET" => Some(3.0),
            "K" => Some(0.5),
            _ => None,
        }
    }

    #[test]
    fn michaelis_menten_value() {
        let e = parse_expr("k3*ET*K*#{S(e)}/(1+K*#{S(e)})", &sig()).unwrap();
        let v = e.eval_with(&consts, &|_| 2.0, &|_| 0.0).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "k3 * ET * K * #{S(e)} / (1 + K * #{S(e)})",
            "(sqrt(8 * K * #{M(b)} + 1) - 1) / (4 * K)",
            "1 - (2 - 3)",
            "-K * (-2)",
            "|M()| + 0.25",
        ] {
            let e = parse_expr(text, &sig()).unwrap();
            let again = parse_expr(&e.to_string(), &sig()).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }

    #[test]
    fn binomial_matches_direct_value() {
        let e = Expr::binomial(Expr::species("S(e)"), 3);
        let v = e.eval_with(&consts, &|_| 6.0, &|_| 0.0).unwrap();
        assert_eq!(v, 20.0);
    }

    #[test]
    fn simplify_folds() {
        let e = parse_expr("0 * #{S(e)} + 2 * 3", &sig()).unwrap();
        assert_eq!(e.simplify(), Expr::Num(6.0));
        let e = parse_expr("1 * K / 1", &sig()).unwrap();
        assert_eq!(e.simplify(), Expr::Const("K".into()));
    }

    #[test]
    fn unknown_constant_errors() {
        let e = parse_expr("q + 1", &sig()).unwrap();
        assert!(e.eval_with(&consts, &|_| 0.0, &|_| 0.0).is_err());
    }
}
