//! AST, parser, and static analysis for the extended logic: first-order logic
//! with sorted quantifiers, the Härtig equicardinality quantifier `I`, the
//! well-foundedness quantifier `WF`, and full second-order quantifiers.
//!
//! Concrete grammar (EBNF; whitespace between tokens is free):
//!
//! ```text
//! formula := iff
//! iff     := imp ( "<->" imp )*
//! imp     := or ( "->" imp )?
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | quant | atom
//! quant   := "forall"  var ":" sort "." formula
//!          | "exists"  var ":" sort "." formula
//!          | "forall2" VAR ":" "(" sort ( "," sort )* ")" "." formula
//!          | "exists2" VAR ":" "(" sort ( "," sort )* ")" "." formula
//!          | "I"  var [":" sort] var [":" sort] "(" formula ")" "(" formula ")"
//!          | "WF" var var [":" sort] "(" formula ")"
//! atom    := "true" | "false" | "(" formula ")"
//!          | term ( ("=" | "!=") term )?
//! term    := name ( "(" term ( "," term )* ")" )?
//! ```
//!
//! A quantifier body extends as far right as possible. `I` and `WF` binder
//! sorts may be omitted when they are inferable from a relation or function
//! argument position in the body (or when the vocabulary has a single sort).
//! `forall`, `exists`, `I`, and `WF` each contribute one level of quantifier
//! rank; second-order binders are tracked separately as degree. The keywords
//! `forall exists forall2 exists2 I WF true false` are reserved.

use crate::hf::SetFormula;
use crate::logic::Vocabulary;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("sort error at byte {pos}: {msg}")]
    Sort { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
}

fn syntax(pos: usize, msg: impl Into<String>) -> FormulaError {
    FormulaError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn sort_err(pos: usize, msg: impl Into<String>) -> FormulaError {
    FormulaError::Sort {
        pos,
        msg: msg.into(),
    }
}

/// A sort-checked term. Symbol references are indices into the vocabulary the
/// formula was checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(usize),
    App(usize, Vec<Term>),
}

/// A sort-checked formula of the extended logic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Rel(usize, Vec<Term>),
    /// Application of a bound second-order relation variable.
    RelVar(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall {
        var: String,
        sort: usize,
        body: Box<Formula>,
    },
    Exists {
        var: String,
        sort: usize,
        body: Box<Formula>,
    },
    /// I x y (φ)(ψ): the φ-definable subset and the ψ-definable subset have
    /// equal cardinality.
    Hartig {
        left_var: String,
        left_sort: usize,
        right_var: String,
        right_sort: usize,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    /// WF x y (φ): the binary relation {(x, y) : φ} is well-founded
    /// (equivalently on finite structures: acyclic).
    Wf {
        x: String,
        y: String,
        sort: usize,
        body: Box<Formula>,
    },
    Forall2 {
        var: String,
        profile: Vec<usize>,
        body: Box<Formula>,
    },
    Exists2 {
        var: String,
        profile: Vec<usize>,
        body: Box<Formula>,
    },
}

// ---------------------------------------------------------------------------
// tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    IffOp,
    EqOp,
    NeqOp,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => {}
            '(' => out.push((Tok::LParen, pos)),
            ')' => out.push((Tok::RParen, pos)),
            ',' => out.push((Tok::Comma, pos)),
            ':' => out.push((Tok::Colon, pos)),
            '.' => out.push((Tok::Dot, pos)),
            '&' => out.push((Tok::Amp, pos)),
            '|' => out.push((Tok::Pipe, pos)),
            '=' => out.push((Tok::EqOp, pos)),
            '!' => {
                if chars.get(i + 1).map(|&(_, c)| c) == Some('=') {
                    out.push((Tok::NeqOp, pos));
                    i += 1;
                } else {
                    out.push((Tok::Bang, pos));
                }
            }
            '-' => {
                if chars.get(i + 1).map(|&(_, c)| c) == Some('>') {
                    out.push((Tok::Arrow, pos));
                    i += 1;
                } else {
                    return Err(syntax(pos, "expected `->`"));
                }
            }
            '<' => {
                if chars.get(i + 1).map(|&(_, c)| c) == Some('-')
                    && chars.get(i + 2).map(|&(_, c)| c) == Some('>')
                {
                    out.push((Tok::IffOp, pos));
                    i += 2;
                } else {
                    return Err(syntax(pos, "expected `<->`"));
                }
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut name = String::new();
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    name.push(chars[i].1);
                    i += 1;
                }
                out.push((Tok::Ident(name), pos));
                continue;
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// raw (unresolved) syntax tree
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum RTerm {
    Name(String, usize),
    App(String, Vec<RTerm>, usize),
}

#[derive(Debug, Clone)]
enum RF {
    True,
    False,
    Atom(RTerm),
    Eq(RTerm, RTerm),
    Neq(RTerm, RTerm),
    Not(Box<RF>),
    And(Box<RF>, Box<RF>),
    Or(Box<RF>, Box<RF>),
    Implies(Box<RF>, Box<RF>),
    Iff(Box<RF>, Box<RF>),
    Forall(String, String, Box<RF>, usize),
    Exists(String, String, Box<RF>, usize),
    Hartig {
        xv: String,
        xs: Option<String>,
        yv: String,
        ys: Option<String>,
        left: Box<RF>,
        right: Box<RF>,
        pos: usize,
    },
    Wf {
        xv: String,
        yv: String,
        sort: Option<String>,
        body: Box<RF>,
        pos: usize,
    },
    Forall2(String, Vec<String>, Box<RF>, usize),
    Exists2(String, Vec<String>, Box<RF>, usize),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "forall2", "exists2", "I", "WF", "true", "false",
];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |&(_, p)| p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Ident(s)) => Ok((s, pos)),
            _ => Err(syntax(pos, format!("expected {what}"))),
        }
    }

    fn binder_ident(&mut self, what: &str) -> Result<(String, usize), FormulaError> {
        let (s, pos) = self.ident(what)?;
        if KEYWORDS.contains(&s.as_str()) {
            return Err(syntax(pos, format!("`{s}` is a reserved word")));
        }
        Ok((s, pos))
    }

    fn formula(&mut self) -> Result<RF, FormulaError> {
        let mut lhs = self.imp()?;
        while self.peek() == Some(&Tok::IffOp) {
            self.at += 1;
            let rhs = self.imp()?;
            lhs = RF::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<RF, FormulaError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let rhs = self.imp()?;
            Ok(RF::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<RF, FormulaError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.at += 1;
            let rhs = self.and()?;
            lhs = RF::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<RF, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.at += 1;
            let rhs = self.unary()?;
            lhs = RF::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RF, FormulaError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.at += 1;
                Ok(RF::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "forall" | "exists" => {
                    let existential = name == "exists";
                    let pos = self.pos();
                    self.at += 1;
                    let (var, _) = self.binder_ident("variable")?;
                    self.expect(Tok::Colon, "`:` after quantified variable")?;
                    let (sort, _) = self.ident("sort name")?;
                    self.expect(Tok::Dot, "`.` after binder")?;
                    let body = Box::new(self.formula()?);
                    Ok(if existential {
                        RF::Exists(var, sort, body, pos)
                    } else {
                        RF::Forall(var, sort, body, pos)
                    })
                }
                "forall2" | "exists2" => {
                    let existential = name == "exists2";
                    let pos = self.pos();
                    self.at += 1;
                    let (var, _) = self.binder_ident("relation variable")?;
                    self.expect(Tok::Colon, "`:` after relation variable")?;
                    self.expect(Tok::LParen, "`(` starting sort profile")?;
                    let mut profile = vec![self.ident("sort name")?.0];
                    while self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                        profile.push(self.ident("sort name")?.0);
                    }
                    self.expect(Tok::RParen, "`)` ending sort profile")?;
                    self.expect(Tok::Dot, "`.` after binder")?;
                    let body = Box::new(self.formula()?);
                    Ok(if existential {
                        RF::Exists2(var, profile, body, pos)
                    } else {
                        RF::Forall2(var, profile, body, pos)
                    })
                }
                "I" => {
                    let pos = self.pos();
                    self.at += 1;
                    let (xv, xs) = self.binder_with_sort()?;
                    let (yv, ys) = self.binder_with_sort()?;
                    self.expect(Tok::LParen, "`(` before first Härtig formula")?;
                    let left = Box::new(self.formula()?);
                    self.expect(Tok::RParen, "`)` after first Härtig formula")?;
                    self.expect(Tok::LParen, "`(` before second Härtig formula")?;
                    let right = Box::new(self.formula()?);
                    self.expect(Tok::RParen, "`)` after second Härtig formula")?;
                    Ok(RF::Hartig {
                        xv,
                        xs,
                        yv,
                        ys,
                        left,
                        right,
                        pos,
                    })
                }
                "WF" => {
                    let pos = self.pos();
                    self.at += 1;
                    let (xv, _) = self.binder_ident("variable")?;
                    let (yv, sort) = self.binder_with_sort()?;
                    self.expect(Tok::LParen, "`(` before WF body")?;
                    let body = Box::new(self.formula()?);
                    self.expect(Tok::RParen, "`)` after WF body")?;
                    Ok(RF::Wf {
                        xv,
                        yv,
                        sort,
                        body,
                        pos,
                    })
                }
                "true" => {
                    self.at += 1;
                    Ok(RF::True)
                }
                "false" => {
                    self.at += 1;
                    Ok(RF::False)
                }
                _ => self.atom(),
            },
            _ => self.atom(),
        }
    }

    fn binder_with_sort(&mut self) -> Result<(String, Option<String>), FormulaError> {
        let (v, _) = self.binder_ident("variable")?;
        if self.peek() == Some(&Tok::Colon) {
            self.at += 1;
            let (s, _) = self.ident("sort name")?;
            Ok((v, Some(s)))
        } else {
            Ok((v, None))
        }
    }

    fn atom(&mut self) -> Result<RF, FormulaError> {
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            let f = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        let lhs = self.term()?;
        match self.peek() {
            Some(Tok::EqOp) => {
                self.at += 1;
                let rhs = self.term()?;
                Ok(RF::Eq(lhs, rhs))
            }
            Some(Tok::NeqOp) => {
                self.at += 1;
                let rhs = self.term()?;
                Ok(RF::Neq(lhs, rhs))
            }
            _ => Ok(RF::Atom(lhs)),
        }
    }

    fn term(&mut self) -> Result<RTerm, FormulaError> {
        let (name, pos) = self.ident("term")?;
        if KEYWORDS.contains(&name.as_str()) {
            return Err(syntax(pos, format!("`{name}` is a reserved word")));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            let mut args = vec![self.term()?];
            while self.peek() == Some(&Tok::Comma) {
                self.at += 1;
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)` closing argument list")?;
            Ok(RTerm::App(name, args, pos))
        } else {
            Ok(RTerm::Name(name, pos))
        }
    }
}

// ---------------------------------------------------------------------------
// sort checking
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Binding {
    First(usize),
    Second(Vec<usize>),
}

struct Checker<'v> {
    vocab: &'v Vocabulary,
    scope: Vec<(String, Binding)>,
    /// Sorts of free first-order variables, inferred from the argument slots
    /// they occupy (or the single sort of a one-sorted vocabulary).
    free: BTreeMap<String, usize>,
}

impl Checker<'_> {
    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
    }

    fn sort_id(&self, name: &str, pos: usize) -> Result<usize, FormulaError> {
        self.vocab
            .sort_id(name)
            .ok_or_else(|| sort_err(pos, format!("sort `{name}` is not declared")))
    }

    /// Returns (checked term, sort); `expected` both constrains and, for a
    /// fresh free variable, determines the sort.
    fn term(&mut self, t: &RTerm, expected: Option<usize>) -> Result<(Term, usize), FormulaError> {
        let (term, sort) = self.term_raw(t, expected)?;
        if let Some(exp) = expected {
            if sort != exp {
                let pos = match t {
                    RTerm::Name(_, p) | RTerm::App(_, _, p) => *p,
                };
                return Err(sort_err(
                    pos,
                    format!(
                        "term has sort `{}`, expected `{}`",
                        self.vocab.sorts[sort], self.vocab.sorts[exp]
                    ),
                ));
            }
        }
        Ok((term, sort))
    }

    fn term_raw(
        &mut self,
        t: &RTerm,
        expected: Option<usize>,
    ) -> Result<(Term, usize), FormulaError> {
        match t {
            RTerm::Name(name, pos) => {
                if let Some(b) = self.lookup(name) {
                    match b {
                        Binding::First(s) => return Ok((Term::Var(name.clone()), *s)),
                        Binding::Second(_) => {
                            return Err(sort_err(
                                *pos,
                                format!("relation variable `{name}` used as a term"),
                            ))
                        }
                    }
                }
                if let Some(c) = self.vocab.constant_id(name) {
                    return Ok((Term::Const(c), self.vocab.constants[c].sort));
                }
                // a free variable; pin its sort on first sight
                if let Some(&s) = self.free.get(name) {
                    return Ok((Term::Var(name.clone()), s));
                }
                let s = match expected {
                    Some(s) => s,
                    None if self.vocab.sorts.len() == 1 => 0,
                    None => {
                        return Err(sort_err(
                            *pos,
                            format!("cannot infer the sort of free variable `{name}`"),
                        ))
                    }
                };
                self.free.insert(name.clone(), s);
                Ok((Term::Var(name.clone()), s))
            }
            RTerm::App(name, args, pos) => {
                let f = self.vocab.function_id(name).ok_or_else(|| {
                    if self.vocab.relation_id(name).is_some() {
                        sort_err(*pos, format!("relation `{name}` used as a term"))
                    } else {
                        FormulaError::UnknownSymbol {
                            name: name.clone(),
                            pos: *pos,
                        }
                    }
                })?;
                let decl = self.vocab.functions[f].clone();
                if decl.args.len() != args.len() {
                    return Err(sort_err(
                        *pos,
                        format!(
                            "function `{name}` expects {} arguments, got {}",
                            decl.args.len(),
                            args.len()
                        ),
                    ));
                }
                let mut checked = Vec::with_capacity(args.len());
                for (a, &expected) in args.iter().zip(&decl.args) {
                    let (term, _) = self.term(a, Some(expected))?;
                    checked.push(term);
                }
                Ok((Term::App(f, checked), decl.result))
            }
        }
    }

    fn formula(&mut self, f: &RF) -> Result<Formula, FormulaError> {
        match f {
            RF::True => Ok(Formula::True),
            RF::False => Ok(Formula::False),
            RF::Not(a) => Ok(Formula::Not(Box::new(self.formula(a)?))),
            RF::And(a, b) => Ok(Formula::And(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            )),
            RF::Or(a, b) => Ok(Formula::Or(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            )),
            RF::Implies(a, b) => Ok(Formula::Implies(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            )),
            RF::Iff(a, b) => Ok(Formula::Iff(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            )),
            RF::Eq(a, b) | RF::Neq(a, b) => {
                // if the left side is a fresh free variable of unknown sort,
                // resolve the right side first
                let (ta, tb) = match self.term(a, None) {
                    Ok((ta, sa)) => {
                        let (tb, _) = self.term(b, Some(sa))?;
                        (ta, tb)
                    }
                    Err(_) => {
                        let (tb, sb) = self.term(b, None)?;
                        let (ta, _) = self.term(a, Some(sb))?;
                        (ta, tb)
                    }
                };
                let eq = Formula::Eq(ta, tb);
                Ok(if matches!(f, RF::Neq(..)) {
                    Formula::Not(Box::new(eq))
                } else {
                    eq
                })
            }
            RF::Atom(t) => match t {
                RTerm::App(name, args, pos) => self.application(name, args, *pos),
                RTerm::Name(name, pos) => {
                    if let Some(r) = self.vocab.relation_id(name) {
                        if self.vocab.relations[r].args.is_empty() {
                            return Ok(Formula::Rel(r, Vec::new()));
                        }
                        return Err(sort_err(
                            *pos,
                            format!("relation `{name}` expects arguments"),
                        ));
                    }
                    Err(syntax(
                        *pos,
                        format!("`{name}` is not a formula (expected a relation application)"),
                    ))
                }
            },
            RF::Forall(var, sort, body, pos) | RF::Exists(var, sort, body, pos) => {
                let s = self.sort_id(sort, *pos)?;
                self.scope.push((var.clone(), Binding::First(s)));
                let checked = self.formula(body)?;
                self.scope.pop();
                let b = Box::new(checked);
                Ok(if matches!(f, RF::Forall(..)) {
                    Formula::Forall {
                        var: var.clone(),
                        sort: s,
                        body: b,
                    }
                } else {
                    Formula::Exists {
                        var: var.clone(),
                        sort: s,
                        body: b,
                    }
                })
            }
            RF::Forall2(var, profile, body, pos) | RF::Exists2(var, profile, body, pos) => {
                let prof: Vec<usize> = profile
                    .iter()
                    .map(|s| self.sort_id(s, *pos))
                    .collect::<Result<_, _>>()?;
                self.scope
                    .push((var.clone(), Binding::Second(prof.clone())));
                let checked = self.formula(body)?;
                self.scope.pop();
                let b = Box::new(checked);
                Ok(if matches!(f, RF::Forall2(..)) {
                    Formula::Forall2 {
                        var: var.clone(),
                        profile: prof,
                        body: b,
                    }
                } else {
                    Formula::Exists2 {
                        var: var.clone(),
                        profile: prof,
                        body: b,
                    }
                })
            }
            RF::Hartig {
                xv,
                xs,
                yv,
                ys,
                left,
                right,
                pos,
            } => {
                let ls = self.resolve_binder_sort(xv, xs.as_deref(), left, *pos)?;
                let rs = self.resolve_binder_sort(yv, ys.as_deref(), right, *pos)?;
                self.scope.push((xv.clone(), Binding::First(ls)));
                let lchecked = self.formula(left)?;
                self.scope.pop();
                self.scope.push((yv.clone(), Binding::First(rs)));
                let rchecked = self.formula(right)?;
                self.scope.pop();
                Ok(Formula::Hartig {
                    left_var: xv.clone(),
                    left_sort: ls,
                    right_var: yv.clone(),
                    right_sort: rs,
                    left: Box::new(lchecked),
                    right: Box::new(rchecked),
                })
            }
            RF::Wf {
                xv,
                yv,
                sort,
                body,
                pos,
            } => {
                let s = match sort {
                    Some(name) => self.sort_id(name, *pos)?,
                    None => match self
                        .infer_sort(xv, body)
                        .or_else(|| self.infer_sort(yv, body))
                    {
                        Some(s) => s,
                        None if self.vocab.sorts.len() == 1 => 0,
                        None => {
                            return Err(sort_err(
                                *pos,
                                format!("cannot infer sort of WF binders `{xv}` `{yv}`"),
                            ))
                        }
                    },
                };
                self.scope.push((xv.clone(), Binding::First(s)));
                self.scope.push((yv.clone(), Binding::First(s)));
                let checked = self.formula(body)?;
                self.scope.pop();
                self.scope.pop();
                Ok(Formula::Wf {
                    x: xv.clone(),
                    y: yv.clone(),
                    sort: s,
                    body: Box::new(checked),
                })
            }
        }
    }

    fn application(
        &mut self,
        name: &str,
        args: &[RTerm],
        pos: usize,
    ) -> Result<Formula, FormulaError> {
        if let Some(Binding::Second(profile)) = self.lookup(name).cloned() {
            if profile.len() != args.len() {
                return Err(sort_err(
                    pos,
                    format!(
                        "relation variable `{name}` expects {} arguments, got {}",
                        profile.len(),
                        args.len()
                    ),
                ));
            }
            let mut checked = Vec::new();
            for (a, &expected) in args.iter().zip(&profile) {
                let (t, _) = self.term(a, Some(expected))?;
                checked.push(t);
            }
            return Ok(Formula::RelVar(name.to_string(), checked));
        }
        if let Some(r) = self.vocab.relation_id(name) {
            let decl = self.vocab.relations[r].clone();
            if decl.args.len() != args.len() {
                return Err(sort_err(
                    pos,
                    format!(
                        "relation `{name}` expects {} arguments, got {}",
                        decl.args.len(),
                        args.len()
                    ),
                ));
            }
            let mut checked = Vec::new();
            for (a, &expected) in args.iter().zip(&decl.args) {
                let (t, _) = self.term(a, Some(expected))?;
                checked.push(t);
            }
            return Ok(Formula::Rel(r, checked));
        }
        if self.vocab.function_id(name).is_some() {
            return Err(sort_err(
                pos,
                format!("function `{name}` used as a formula"),
            ));
        }
        Err(FormulaError::UnknownSymbol {
            name: name.to_string(),
            pos,
        })
    }

    fn resolve_binder_sort(
        &mut self,
        var: &str,
        annotated: Option<&str>,
        body: &RF,
        pos: usize,
    ) -> Result<usize, FormulaError> {
        match annotated {
            Some(name) => self.sort_id(name, pos),
            None => match self.infer_sort(var, body) {
                Some(s) => Ok(s),
                None if self.vocab.sorts.len() == 1 => Ok(0),
                None => Err(sort_err(
                    pos,
                    format!("cannot infer sort of binder `{var}` (add `:sort`)"),
                )),
            },
        }
    }

    /// Finds the sort of `var` from the first relation or function argument
    /// position it occupies in the (raw) body.
    fn infer_sort(&self, var: &str, body: &RF) -> Option<usize> {
        fn from_args(vocab: &Vocabulary, var: &str, name: &str, args: &[RTerm]) -> Option<usize> {
            let profile: &[usize] = if let Some(r) = vocab.relation_id(name) {
                &vocab.relations[r].args
            } else {
                let f = vocab.function_id(name)?;
                &vocab.functions[f].args
            };
            for (slot, a) in args.iter().enumerate() {
                match a {
                    RTerm::Name(n, _) if n == var => return profile.get(slot).copied(),
                    RTerm::App(n, inner, _) => {
                        if let Some(s) = from_args(vocab, var, n, inner) {
                            return Some(s);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        fn walk(vocab: &Vocabulary, var: &str, f: &RF) -> Option<usize> {
            match f {
                RF::Atom(RTerm::App(name, args, _)) => from_args(vocab, var, name, args),
                RF::Atom(_) | RF::True | RF::False => None,
                RF::Eq(a, b) | RF::Neq(a, b) => {
                    for t in [a, b] {
                        if let RTerm::App(name, args, _) = t {
                            if let Some(s) = from_args(vocab, var, name, args) {
                                return Some(s);
                            }
                        }
                    }
                    None
                }
                RF::Not(a) => walk(vocab, var, a),
                RF::And(a, b) | RF::Or(a, b) | RF::Implies(a, b) | RF::Iff(a, b) => {
                    walk(vocab, var, a).or_else(|| walk(vocab, var, b))
                }
                // an inner binder of the same name shadows; stop there
                RF::Forall(v, _, a, _) | RF::Exists(v, _, a, _) => {
                    (v != var).then(|| walk(vocab, var, a)).flatten()
                }
                RF::Forall2(v, _, a, _) | RF::Exists2(v, _, a, _) => {
                    (v != var).then(|| walk(vocab, var, a)).flatten()
                }
                RF::Hartig {
                    xv,
                    yv,
                    left,
                    right,
                    ..
                } => {
                    let l = (xv != var).then(|| walk(vocab, var, left)).flatten();
                    l.or_else(|| (yv != var).then(|| walk(vocab, var, right)).flatten())
                }
                RF::Wf { xv, yv, body, .. } => (xv != var && yv != var)
                    .then(|| walk(vocab, var, body))
                    .flatten(),
            }
        }
        walk(self.vocab, var, body)
    }
}

/// Parses and sort-checks a formula over the given vocabulary.
pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Formula, FormulaError> {
    parse_open(text, vocab).map(|(phi, _)| phi)
}

/// Like [`parse`], but also returns the inferred sorts of free first-order
/// variables (useful for building assignments for open formulas).
pub fn parse_open(
    text: &str,
    vocab: &Vocabulary,
) -> Result<(Formula, BTreeMap<String, usize>), FormulaError> {
    let toks = tokenize(text)?;
    let end = text.len();
    let mut p = Parser { toks, at: 0, end };
    let raw = p.formula()?;
    if p.at != p.toks.len() {
        return Err(syntax(p.pos(), "trailing input after formula"));
    }
    let mut checker = Checker {
        vocab,
        scope: Vec::new(),
        free: BTreeMap::new(),
    };
    let phi = checker.formula(&raw)?;
    Ok((phi, checker.free))
}

// ---------------------------------------------------------------------------
// analysis
// ---------------------------------------------------------------------------

/// Static facts about a checked formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    /// Names of the vocabulary symbols that actually occur.
    pub symbols: BTreeSet<String>,
    /// Names of the sorts used by binders or occurring symbols.
    pub sorts: BTreeSet<String>,
    /// Nested first-order binder depth; `I` and `WF` count one level each.
    pub quantifier_rank: u32,
    /// Nesting depth of second-order binders.
    pub second_order_degree: u32,
    pub free_first_order: BTreeSet<String>,
    pub free_second_order: BTreeSet<String>,
}

struct AnalysisAcc {
    symbols: BTreeSet<String>,
    sorts: BTreeSet<String>,
    free_fo: BTreeSet<String>,
    free_so: BTreeSet<String>,
    bound_fo: Vec<String>,
    bound_so: Vec<String>,
}

pub fn analyze(phi: &Formula, vocab: &Vocabulary) -> Analysis {
    fn term_walk(t: &Term, vocab: &Vocabulary, acc: &mut AnalysisAcc) {
        match t {
            Term::Var(v) => {
                if !acc.bound_fo.contains(v) {
                    acc.free_fo.insert(v.clone());
                }
            }
            Term::Const(c) => {
                let decl = &vocab.constants[*c];
                acc.symbols.insert(decl.name.clone());
                acc.sorts.insert(vocab.sorts[decl.sort].clone());
            }
            Term::App(f, args) => {
                let decl = &vocab.functions[*f];
                acc.symbols.insert(decl.name.clone());
                for &s in decl.args.iter().chain([&decl.result]) {
                    acc.sorts.insert(vocab.sorts[s].clone());
                }
                for a in args {
                    term_walk(a, vocab, acc);
                }
            }
        }
    }

    fn walk(phi: &Formula, vocab: &Vocabulary, acc: &mut AnalysisAcc) -> (u32, u32) {
        match phi {
            Formula::True | Formula::False => (0, 0),
            Formula::Rel(r, args) => {
                let decl = &vocab.relations[*r];
                acc.symbols.insert(decl.name.clone());
                for &s in &decl.args {
                    acc.sorts.insert(vocab.sorts[s].clone());
                }
                for a in args {
                    term_walk(a, vocab, acc);
                }
                (0, 0)
            }
            Formula::RelVar(name, args) => {
                if !acc.bound_so.contains(name) {
                    acc.free_so.insert(name.clone());
                }
                for a in args {
                    term_walk(a, vocab, acc);
                }
                (0, 0)
            }
            Formula::Eq(a, b) => {
                term_walk(a, vocab, acc);
                term_walk(b, vocab, acc);
                (0, 0)
            }
            Formula::Not(a) => walk(a, vocab, acc),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                let (qa, da) = walk(a, vocab, acc);
                let (qb, db) = walk(b, vocab, acc);
                (qa.max(qb), da.max(db))
            }
            Formula::Forall { var, sort, body } | Formula::Exists { var, sort, body } => {
                acc.sorts.insert(vocab.sorts[*sort].clone());
                acc.bound_fo.push(var.clone());
                let (q, d) = walk(body, vocab, acc);
                acc.bound_fo.pop();
                (q + 1, d)
            }
            Formula::Hartig {
                left_var,
                left_sort,
                right_var,
                right_sort,
                left,
                right,
            } => {
                acc.sorts.insert(vocab.sorts[*left_sort].clone());
                acc.sorts.insert(vocab.sorts[*right_sort].clone());
                acc.bound_fo.push(left_var.clone());
                let (ql, dl) = walk(left, vocab, acc);
                acc.bound_fo.pop();
                acc.bound_fo.push(right_var.clone());
                let (qr, dr) = walk(right, vocab, acc);
                acc.bound_fo.pop();
                (ql.max(qr) + 1, dl.max(dr))
            }
            Formula::Wf { x, y, sort, body } => {
                acc.sorts.insert(vocab.sorts[*sort].clone());
                acc.bound_fo.push(x.clone());
                acc.bound_fo.push(y.clone());
                let (q, d) = walk(body, vocab, acc);
                acc.bound_fo.pop();
                acc.bound_fo.pop();
                (q + 1, d)
            }
            Formula::Forall2 { var, profile, body } | Formula::Exists2 { var, profile, body } => {
                for &s in profile {
                    acc.sorts.insert(vocab.sorts[s].clone());
                }
                acc.bound_so.push(var.clone());
                let (q, d) = walk(body, vocab, acc);
                acc.bound_so.pop();
                (q, d + 1)
            }
        }
    }

    let mut acc = AnalysisAcc {
        symbols: BTreeSet::new(),
        sorts: BTreeSet::new(),
        free_fo: BTreeSet::new(),
        free_so: BTreeSet::new(),
        bound_fo: Vec::new(),
        bound_so: Vec::new(),
    };
    let (quantifier_rank, second_order_degree) = walk(phi, vocab, &mut acc);
    Analysis {
        symbols: acc.symbols,
        sorts: acc.sorts,
        quantifier_rank,
        second_order_degree,
        free_first_order: acc.free_fo,
        free_second_order: acc.free_so,
    }
}

// ---------------------------------------------------------------------------
// pretty printing
// ---------------------------------------------------------------------------

/// Canonical text form; `parse(pretty(φ)) == φ` structurally.
pub fn pretty(phi: &Formula, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    write_formula(phi, vocab, &mut out);
    out
}

fn write_term(t: &Term, vocab: &Vocabulary, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Const(c) => out.push_str(&vocab.constants[*c].name),
        Term::App(f, args) => {
            out.push_str(&vocab.functions[*f].name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(a, vocab, out);
            }
            out.push(')');
        }
    }
}

fn write_formula(phi: &Formula, vocab: &Vocabulary, out: &mut String) {
    match phi {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Rel(r, args) => {
            out.push_str(&vocab.relations[*r].name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_term(a, vocab, out);
                }
                out.push(')');
            }
        }
        Formula::RelVar(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(a, vocab, out);
            }
            out.push(')');
        }
        Formula::Eq(a, b) => {
            write_term(a, vocab, out);
            out.push_str(" = ");
            write_term(b, vocab, out);
        }
        Formula::Not(a) => {
            out.push_str("!(");
            write_formula(a, vocab, out);
            out.push(')');
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let op = match phi {
                Formula::And(..) => "&",
                Formula::Or(..) => "|",
                Formula::Implies(..) => "->",
                _ => "<->",
            };
            out.push('(');
            write_formula(a, vocab, out);
            let _ = write!(out, " {op} ");
            write_formula(b, vocab, out);
            out.push(')');
        }
        // binder-dot forms get their own parentheses: their body extends
        // maximally right, so as a left operand they would swallow the operator
        Formula::Forall { var, sort, body } | Formula::Exists { var, sort, body } => {
            let kw = if matches!(phi, Formula::Forall { .. }) {
                "forall"
            } else {
                "exists"
            };
            let _ = write!(out, "({kw} {var}:{} . (", vocab.sorts[*sort]);
            write_formula(body, vocab, out);
            out.push_str("))");
        }
        Formula::Hartig {
            left_var,
            left_sort,
            right_var,
            right_sort,
            left,
            right,
        } => {
            let _ = write!(
                out,
                "I {left_var}:{} {right_var}:{} (",
                vocab.sorts[*left_sort], vocab.sorts[*right_sort]
            );
            write_formula(left, vocab, out);
            out.push_str(") (");
            write_formula(right, vocab, out);
            out.push(')');
        }
        Formula::Wf { x, y, sort, body } => {
            let _ = write!(out, "WF {x} {y}:{} (", vocab.sorts[*sort]);
            write_formula(body, vocab, out);
            out.push(')');
        }
        Formula::Forall2 { var, profile, body } | Formula::Exists2 { var, profile, body } => {
            let kw = if matches!(phi, Formula::Forall2 { .. }) {
                "forall2"
            } else {
                "exists2"
            };
            let profile_names: Vec<&str> =
                profile.iter().map(|&s| vocab.sorts[s].as_str()).collect();
            let _ = write!(out, "({kw} {var}:({}) . (", profile_names.join(", "));
            write_formula(body, vocab, out);
            out.push_str("))");
        }
    }
}

// ---------------------------------------------------------------------------
// translation of ∈-formulas to first-order formulas over a membership relation
// ---------------------------------------------------------------------------

/// Rewrites an ∈-formula as a first-order formula over a binary relation
/// symbol (membership written as the relation `rel`), with sort `sort` for
/// every variable. Bounded quantifiers become guarded quantifiers. Free
/// variables of the ∈-formula are mapped through `free_map` (typically to
/// variables or constants of the target vocabulary).
pub fn set_formula_to_fo(
    sf: &SetFormula,
    sort: usize,
    rel: usize,
    free_map: &BTreeMap<String, Term>,
) -> Formula {
    fn term_for(v: &str, bound: &[String], free_map: &BTreeMap<String, Term>) -> Term {
        if bound.iter().any(|b| b == v) {
            Term::Var(v.to_string())
        } else {
            free_map
                .get(v)
                .cloned()
                .unwrap_or_else(|| Term::Var(v.to_string()))
        }
    }
    fn go(
        sf: &SetFormula,
        sort: usize,
        rel: usize,
        bound: &mut Vec<String>,
        free_map: &BTreeMap<String, Term>,
    ) -> Formula {
        match sf {
            SetFormula::In(a, b) => Formula::Rel(
                rel,
                vec![term_for(a, bound, free_map), term_for(b, bound, free_map)],
            ),
            SetFormula::Eq(a, b) => {
                Formula::Eq(term_for(a, bound, free_map), term_for(b, bound, free_map))
            }
            SetFormula::Not(a) => Formula::Not(Box::new(go(a, sort, rel, bound, free_map))),
            SetFormula::And(a, b) => Formula::And(
                Box::new(go(a, sort, rel, bound, free_map)),
                Box::new(go(b, sort, rel, bound, free_map)),
            ),
            SetFormula::Or(a, b) => Formula::Or(
                Box::new(go(a, sort, rel, bound, free_map)),
                Box::new(go(b, sort, rel, bound, free_map)),
            ),
            SetFormula::Implies(a, b) => Formula::Implies(
                Box::new(go(a, sort, rel, bound, free_map)),
                Box::new(go(b, sort, rel, bound, free_map)),
            ),
            SetFormula::Iff(a, b) => Formula::Iff(
                Box::new(go(a, sort, rel, bound, free_map)),
                Box::new(go(b, sort, rel, bound, free_map)),
            ),
            SetFormula::Forall(v, a) => {
                bound.push(v.clone());
                let body = go(a, sort, rel, bound, free_map);
                bound.pop();
                Formula::Forall {
                    var: v.clone(),
                    sort,
                    body: Box::new(body),
                }
            }
            SetFormula::Exists(v, a) => {
                bound.push(v.clone());
                let body = go(a, sort, rel, bound, free_map);
                bound.pop();
                Formula::Exists {
                    var: v.clone(),
                    sort,
                    body: Box::new(body),
                }
            }
            SetFormula::ForallIn(v, w, a) => {
                let guard = Formula::Rel(
                    rel,
                    vec![Term::Var(v.clone()), term_for(w, bound, free_map)],
                );
                bound.push(v.clone());
                let body = go(a, sort, rel, bound, free_map);
                bound.pop();
                Formula::Forall {
                    var: v.clone(),
                    sort,
                    body: Box::new(Formula::Implies(Box::new(guard), Box::new(body))),
                }
            }
            SetFormula::ExistsIn(v, w, a) => {
                let guard = Formula::Rel(
                    rel,
                    vec![Term::Var(v.clone()), term_for(w, bound, free_map)],
                );
                bound.push(v.clone());
                let body = go(a, sort, rel, bound, free_map);
                bound.pop();
                Formula::Exists {
                    var: v.clone(),
                    sort,
                    body: Box::new(Formula::And(Box::new(guard), Box::new(body))),
                }
            }
        }
    }
    go(sf, sort, rel, &mut Vec::new(), free_map)
}
