//! First-order formulas over a finite relational signature.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! φ ::= R(t, ..., t) | t = t | ~φ | (φ & φ) | (φ | φ) | (φ -> φ)
//!     | E x. φ | A x. φ
//! ```
//!
//! Binary connectives need their own parentheses. Inside one pair of
//! parentheses `&` and `|` may be chained and associate to the left. A term
//! is a constant if the signature declares it or if it starts with `c_`
//! (element constants `c_σ`); every other identifier is a variable.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

/// Prefix of element constants naming domain elements.
pub const ELEMENT_PREFIX: &str = "c_";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(v: &str) -> Self {
        Term::Var(v.to_string())
    }

    pub fn constant(c: &str) -> Self {
        Term::Const(c.to_string())
    }

    /// The element constant `c_id`.
    pub fn element(id: &str) -> Self {
        Term::Const(format!("{ELEMENT_PREFIX}{id}"))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn rel(name: &str, args: Vec<Term>) -> Self {
        Formula::Rel(name.to_string(), args)
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn exists(v: &str, a: Formula) -> Self {
        Formula::Exists(v.to_string(), Box::new(a))
    }

    pub fn forall(v: &str, a: Formula) -> Self {
        Formula::Forall(v.to_string(), Box::new(a))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
                if let Term::Var(v) = t {
                    if !bound.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            };
            match f {
                Formula::Rel(_, ts) => ts.iter().for_each(|t| term(t, bound, out)),
                Formula::Eq(a, b) => {
                    term(a, bound, out);
                    term(b, bound, out);
                }
                Formula::Not(a) => go(a, bound, out),
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Exists(v, a) | Formula::Forall(v, a) => {
                    bound.push(v.clone());
                    go(a, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Replaces the free occurrences of `var` by `t`. `t` is expected to
    /// be a constant, so no capture can happen.
    pub fn substitute(&self, var: &str, t: &Term) -> Formula {
        let sub = |x: &Term| match x {
            Term::Var(v) if v == var => t.clone(),
            other => other.clone(),
        };
        match self {
            Formula::Rel(r, ts) => Formula::Rel(r.clone(), ts.iter().map(sub).collect()),
            Formula::Eq(a, b) => Formula::Eq(sub(a), sub(b)),
            Formula::Not(a) => Formula::not(a.substitute(var, t)),
            Formula::And(a, b) => Formula::and(a.substitute(var, t), b.substitute(var, t)),
            Formula::Or(a, b) => Formula::or(a.substitute(var, t), b.substitute(var, t)),
            Formula::Implies(a, b) => Formula::implies(a.substitute(var, t), b.substitute(var, t)),
            Formula::Exists(v, _) | Formula::Forall(v, _) if v == var => self.clone(),
            Formula::Exists(v, a) => Formula::exists(v, a.substitute(var, t)),
            Formula::Forall(v, a) => Formula::forall(v, a.substitute(var, t)),
        }
    }

    /// Quantifier nesting depth.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::Not(a) => a.quantifier_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.quantifier_depth().max(b.quantifier_depth())
            }
            Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.quantifier_depth(),
        }
    }

    /// Nesting depth of the syntax tree.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Rel(r, ts) => {
                write!(f, "{r}(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(a) => write!(f, "~{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Exists(v, a) => write!(f, "E {v}. {a}"),
            Formula::Forall(v, a) => write!(f, "A {v}. {a}"),
        }
    }
}

/// Relation symbols with arities, plus declared constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub relations: BTreeMap<String, usize>,
    pub constants: BTreeSet<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Self {
        self.relations.insert(name.to_string(), arity);
        self
    }

    pub fn with_constant(mut self, name: &str) -> Self {
        self.constants.insert(name.to_string());
        self
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name) || name.starts_with(ELEMENT_PREFIX)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownSymbol(String),
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
}

/// A parse failure at a character position (0-based).
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownSymbol(s) => write!(f, "unknown relation symbol `{s}`"),
            ParseErrorKind::Arity {
                relation,
                expected,
                found,
            } => write!(
                f,
                "relation `{relation}` takes {expected} arguments but got {found}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Equals,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Dot,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '=' => Tok::Equals,
            '~' => Tok::Tilde,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '.' => Tok::Dot,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Arrow
            }
            c if is_ident_char(c) => {
                while i + 1 < chars.len() && is_ident_char(chars[i + 1]) {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => {
                return Err(ParseError {
                    pos: start,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    sig: &'a Signature,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: String) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Syntax(msg),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {t}, found {}", self.peek()))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Tok::Ident(name) => Ok(if self.sig.is_constant(&name) {
                Term::Const(name)
            } else {
                Term::Var(name)
            }),
            other => {
                self.at -= 1;
                self.syntax(format!("expected a term, found {other}"))
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.formula()?))
            }
            Tok::LParen => {
                self.bump();
                let mut lhs = self.formula()?;
                let op = self.bump();
                match op {
                    Tok::Amp | Tok::Pipe => loop {
                        let rhs = self.formula()?;
                        lhs = if op == Tok::Amp {
                            Formula::and(lhs, rhs)
                        } else {
                            Formula::or(lhs, rhs)
                        };
                        if *self.peek() == op {
                            self.bump();
                        } else {
                            break;
                        }
                    },
                    Tok::Arrow => {
                        let rhs = self.formula()?;
                        lhs = Formula::implies(lhs, rhs);
                    }
                    other => {
                        self.at -= 1;
                        return self.syntax(format!("expected `&`, `|` or `->`, found {other}"));
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(lhs)
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                if (name == "E" || name == "A") && matches!(self.peek2(), Tok::Ident(_)) {
                    self.bump();
                    let var_pos = self.pos();
                    let Tok::Ident(var) = self.bump() else {
                        unreachable!()
                    };
                    if self.sig.is_constant(&var) {
                        return Err(ParseError {
                            pos: var_pos,
                            kind: ParseErrorKind::Syntax(format!(
                                "cannot quantify over constant `{var}`"
                            )),
                        });
                    }
                    self.expect(Tok::Dot)?;
                    let body = self.formula()?;
                    return Ok(if name == "E" {
                        Formula::exists(&var, body)
                    } else {
                        Formula::forall(&var, body)
                    });
                }
                match self.peek2() {
                    Tok::LParen => {
                        self.bump();
                        self.bump();
                        let Some(&arity) = self.sig.relations.get(&name) else {
                            return Err(ParseError {
                                pos,
                                kind: ParseErrorKind::UnknownSymbol(name),
                            });
                        };
                        let mut args = Vec::new();
                        if *self.peek() != Tok::RParen {
                            args.push(self.term()?);
                            while *self.peek() == Tok::Comma {
                                self.bump();
                                args.push(self.term()?);
                            }
                        }
                        self.expect(Tok::RParen)?;
                        if args.len() != arity {
                            return Err(ParseError {
                                pos,
                                kind: ParseErrorKind::Arity {
                                    relation: name,
                                    expected: arity,
                                    found: args.len(),
                                },
                            });
                        }
                        Ok(Formula::Rel(name, args))
                    }
                    Tok::Equals => {
                        let a = self.term()?;
                        self.bump();
                        let b = self.term()?;
                        Ok(Formula::Eq(a, b))
                    }
                    other => {
                        let msg = format!("expected `(` or `=` after `{name}`, found {other}");
                        self.bump();
                        self.syntax(msg)
                    }
                }
            }
            other => self.syntax(format!("expected a formula, found {other}")),
        }
    }
}

/// Parses a formula against a signature.
pub fn parse(src: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        sig,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.syntax(format!("unexpected trailing {}", p.peek()));
    }
    Ok(f)
}

/// All tuples of length `arity` over `0..n`, in lexicographic order.
pub fn tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// Variables used by [`enumerate`].
pub const ENUM_VARS: [&str; 2] = ["x", "y"];

/// The canonical formula family used by the fullness and elementarity
/// checks.
///
/// Atoms are the relation and equality atoms over the variables `x`, `y`
/// and the declared constants. Level 0 holds literals and conjunctions of
/// two literals. Each further level adds `∃v φ` for every `φ` of the
/// previous level with `v` free, and its negation. Duplicates are dropped
/// and the order is deterministic.
pub fn enumerate(sig: &Signature, depth: usize) -> Vec<Formula> {
    let mut terms: Vec<Term> = ENUM_VARS.iter().map(|v| Term::var(v)).collect();
    terms.extend(sig.constants.iter().map(|c| Term::Const(c.clone())));
    let mut atoms = Vec::new();
    for (r, &arity) in &sig.relations {
        for idx in tuples(terms.len(), arity) {
            atoms.push(Formula::Rel(
                r.clone(),
                idx.iter().map(|&i| terms[i].clone()).collect(),
            ));
        }
    }
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            atoms.push(Formula::Eq(terms[i].clone(), terms[j].clone()));
        }
    }
    let mut literals = atoms.clone();
    literals.extend(atoms.iter().cloned().map(Formula::not));

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |f: Formula, out: &mut Vec<Formula>| {
        if seen.insert(f.clone()) {
            out.push(f);
        }
    };
    let mut level = Vec::new();
    for l in &literals {
        level.push(l.clone());
    }
    for (i, a) in literals.iter().enumerate() {
        for b in &literals[i + 1..] {
            let complementary = matches!(b, Formula::Not(inner) if **inner == *a);
            if !complementary {
                level.push(Formula::and(a.clone(), b.clone()));
            }
        }
    }
    for f in &level {
        push(f.clone(), &mut out);
    }
    for _ in 0..depth {
        let mut next = Vec::new();
        for f in &level {
            let fv = f.free_vars();
            for v in ENUM_VARS {
                if fv.iter().any(|x| x == v) {
                    let q = Formula::exists(v, f.clone());
                    next.push(Formula::not(q.clone()));
                    next.push(q);
                }
            }
        }
        next.sort();
        next.dedup();
        for f in &next {
            push(f.clone(), &mut out);
        }
        level = next;
    }
    out
}
