//! Textual document formats.
//!
//! Structure documents (one declaration per line, `#` comments allowed):
//!
//! ```text
//! sort s = e0 e1 e2
//! rel E(s, s) = (e0, e1) (e1, e2)
//! func f(s) -> s = (e0) -> e1 (e1) -> e2 (e2) -> e2
//! const c: s = e0
//! ```
//!
//! Vocabulary documents are the same lines without the `= ...` parts.
//! Printing a structure with `Display` produces exactly this format, so
//! documents round-trip losslessly.
//!
//! Projection-spec documents:
//!
//! ```text
//! base:
//!   sort a
//!   sort b
//! extended:
//!   sort a
//!   sort b
//!   rel E(a, b)
//! formula: forall u:b . forall v:b . ((forall x:a . (E(x, u) <-> E(x, v))) -> u = v)
//! bound: exp2
//! ```
//!
//! `formula-file: path` loads the sentence from a file (relative to the spec
//! document). `bound` is one of `id`, `exp2`, `exp2exp2`, `iterate <name> <n>`,
//! `table k -> v, k -> v, ...`, or `unbounded`.

use crate::formula::parse as parse_formula;
use crate::logic::{LogicError, Structure, Vocabulary, VocabularyBuilder};
use crate::projection::{Bound, BoundingFunction, ProjectionError, ProjectionSpec};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Doc { line: usize, msg: String },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("formula: {0}")]
    Formula(#[from] crate::formula::FormulaError),
    #[error(transparent)]
    Spec(#[from] ProjectionError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn doc_err(line: usize, msg: impl Into<String>) -> TextError {
    TextError::Doc {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Splits "NAME(arg, arg)" into the name and argument list.
fn split_profile(s: &str, line: usize) -> Result<(&str, Vec<&str>), TextError> {
    let open = s
        .find('(')
        .ok_or_else(|| doc_err(line, "expected `(` in symbol declaration"))?;
    let close = s
        .rfind(')')
        .ok_or_else(|| doc_err(line, "expected `)` in symbol declaration"))?;
    if close < open {
        return Err(doc_err(
            line,
            "mismatched parentheses in symbol declaration",
        ));
    }
    let name = s[..open].trim();
    let inner = s[open + 1..close].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((name, args))
}

enum DeclLine<'a> {
    Sort {
        name: &'a str,
        elements: Option<Vec<&'a str>>,
    },
    Rel {
        name: &'a str,
        args: Vec<&'a str>,
        tuples: Option<Vec<Vec<&'a str>>>,
    },
    Func {
        name: &'a str,
        args: Vec<&'a str>,
        result: &'a str,
        graph: Option<Vec<(Vec<&'a str>, &'a str)>>,
    },
    Const {
        name: &'a str,
        sort: &'a str,
        value: Option<&'a str>,
    },
}

/// Parses "(a, b) (c, d)" into tuples of names.
fn parse_tuples(s: &str, line: usize) -> Result<Vec<Vec<&str>>, TextError> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if !rest.starts_with('(') {
            return Err(doc_err(
                line,
                format!("expected `(` before tuple, found `{rest}`"),
            ));
        }
        let close = rest
            .find(')')
            .ok_or_else(|| doc_err(line, "unclosed tuple"))?;
        let inner = rest[1..close].trim();
        let tuple: Vec<&str> = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        out.push(tuple);
        rest = rest[close + 1..].trim_start();
    }
    Ok(out)
}

fn parse_decl_line(line_no: usize, line: &str) -> Result<DeclLine<'_>, TextError> {
    let (keyword, rest) = line
        .split_once(' ')
        .ok_or_else(|| doc_err(line_no, "expected a declaration"))?;
    let (head, body) = match rest.split_once('=') {
        Some((h, b)) => (h.trim(), Some(b.trim())),
        None => (rest.trim(), None),
    };
    match keyword {
        "sort" => Ok(DeclLine::Sort {
            name: head,
            elements: body.map(|b| b.split_whitespace().collect()),
        }),
        "rel" => {
            let (name, args) = split_profile(head, line_no)?;
            let tuples = body.map(|b| parse_tuples(b, line_no)).transpose()?;
            Ok(DeclLine::Rel { name, args, tuples })
        }
        "func" => {
            let (sig, result) = head
                .split_once("->")
                .ok_or_else(|| doc_err(line_no, "expected `->` in function declaration"))?;
            let (name, args) = split_profile(sig.trim(), line_no)?;
            let graph = body
                .map(|b| -> Result<Vec<(Vec<&str>, &str)>, TextError> {
                    let mut out = Vec::new();
                    let mut rest = b.trim();
                    while !rest.is_empty() {
                        if !rest.starts_with('(') {
                            return Err(doc_err(line_no, "expected `(` before function entry"));
                        }
                        let close = rest
                            .find(')')
                            .ok_or_else(|| doc_err(line_no, "unclosed function entry"))?;
                        let inner = rest[1..close].trim();
                        let tuple: Vec<&str> = if inner.is_empty() {
                            Vec::new()
                        } else {
                            inner.split(',').map(str::trim).collect()
                        };
                        rest = rest[close + 1..].trim_start();
                        let rest2 = rest
                            .strip_prefix("->")
                            .ok_or_else(|| doc_err(line_no, "expected `->` after entry args"))?
                            .trim_start();
                        let end = rest2.find(['(', ' ']).unwrap_or(rest2.len());
                        let value = &rest2[..end];
                        if value.is_empty() {
                            return Err(doc_err(line_no, "missing function value"));
                        }
                        out.push((tuple, value));
                        rest = rest2[end..].trim_start();
                    }
                    Ok(out)
                })
                .transpose()?;
            Ok(DeclLine::Func {
                name,
                args,
                result: result.trim(),
                graph,
            })
        }
        "const" => {
            let (name, sort) = head
                .split_once(':')
                .ok_or_else(|| doc_err(line_no, "expected `:` in constant declaration"))?;
            Ok(DeclLine::Const {
                name: name.trim(),
                sort: sort.trim(),
                value: body,
            })
        }
        other => Err(doc_err(line_no, format!("unknown declaration `{other}`"))),
    }
}

fn build_vocabulary(decls: &[(usize, DeclLine<'_>)]) -> Result<Vocabulary, TextError> {
    let mut b: VocabularyBuilder = Vocabulary::builder();
    for (_, d) in decls {
        b = match d {
            DeclLine::Sort { name, .. } => b.sort(name),
            DeclLine::Rel { name, args, .. } => b.relation(name, args),
            DeclLine::Func {
                name, args, result, ..
            } => b.function(name, args, result),
            DeclLine::Const { name, sort, .. } => b.constant(name, sort),
        };
    }
    Ok(b.build()?)
}

/// Parses a vocabulary document (declarations without interpretations).
pub fn parse_vocabulary(text: &str) -> Result<Vocabulary, TextError> {
    let decls: Vec<(usize, DeclLine)> = content_lines(text)
        .map(|(n, l)| parse_decl_line(n, l).map(|d| (n, d)))
        .collect::<Result<_, _>>()?;
    build_vocabulary(&decls)
}

/// Parses a structure document: a vocabulary together with element names and
/// interpretations.
pub fn parse_structure(text: &str) -> Result<Structure, TextError> {
    let decls: Vec<(usize, DeclLine)> = content_lines(text)
        .map(|(n, l)| parse_decl_line(n, l).map(|d| (n, d)))
        .collect::<Result<_, _>>()?;
    let vocab = Arc::new(build_vocabulary(&decls)?);
    let mut domains: Vec<Vec<String>> = vec![Vec::new(); vocab.sorts.len()];
    for (n, d) in &decls {
        if let DeclLine::Sort { name, elements } = d {
            let elements = elements.as_ref().ok_or_else(|| {
                doc_err(
                    *n,
                    format!("sort {name} needs `= elem ...` (possibly empty)"),
                )
            })?;
            let id = vocab.sort_id(name).expect("declared above");
            domains[id] = elements.iter().map(|e| e.to_string()).collect();
            let mut sorted: Vec<&&str> = elements.iter().collect();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(doc_err(
                    *n,
                    format!("duplicate element name in sort {name}"),
                ));
            }
        }
    }
    let mut s = Structure::new(vocab.clone(), domains)?;
    let elem = |sort: usize, name: &str, line: usize, s: &Structure| -> Result<usize, TextError> {
        s.element_index(sort, name)
            .ok_or_else(|| doc_err(line, format!("unknown element `{name}`")))
    };
    for (n, d) in &decls {
        match d {
            DeclLine::Sort { .. } => {}
            DeclLine::Rel { name, tuples, .. } => {
                let id = vocab.relation_id(name).expect("declared above");
                let args = vocab.relations[id].args.clone();
                let tuples = tuples
                    .as_ref()
                    .ok_or_else(|| doc_err(*n, format!("relation {name} needs `= (tuples)`")))?;
                for t in tuples {
                    if t.len() != args.len() {
                        return Err(doc_err(*n, format!("tuple arity mismatch for {name}")));
                    }
                    let tuple: Vec<usize> = t
                        .iter()
                        .zip(&args)
                        .map(|(e, &sort)| elem(sort, e, *n, &s))
                        .collect::<Result<_, _>>()?;
                    s.rel_mut(id).set(&tuple, true);
                }
            }
            DeclLine::Func { name, graph, .. } => {
                let id = vocab.function_id(name).expect("declared above");
                let decl = vocab.functions[id].clone();
                let graph = graph.as_ref().ok_or_else(|| {
                    doc_err(*n, format!("function {name} needs `= (args) -> value`"))
                })?;
                let space: usize = decl.args.iter().map(|&sort| s.sort_size(sort)).product();
                if graph.len() != space {
                    return Err(doc_err(
                        *n,
                        format!(
                            "function {name} needs exactly {space} entries, got {}",
                            graph.len()
                        ),
                    ));
                }
                for (t, v) in graph {
                    if t.len() != decl.args.len() {
                        return Err(doc_err(*n, format!("entry arity mismatch for {name}")));
                    }
                    let tuple: Vec<usize> = t
                        .iter()
                        .zip(&decl.args)
                        .map(|(e, &sort)| elem(sort, e, *n, &s))
                        .collect::<Result<_, _>>()?;
                    let value = elem(decl.result, v, *n, &s)?;
                    s.func_mut(id).set(&tuple, value);
                }
            }
            DeclLine::Const { name, value, .. } => {
                let id = vocab.constant_id(name).expect("declared above");
                let value =
                    value.ok_or_else(|| doc_err(*n, format!("constant {name} needs `= elem`")))?;
                let sort = vocab.constants[id].sort;
                let v = elem(sort, value, *n, &s)?;
                s.set_constant(id, v);
            }
        }
    }
    Ok(s)
}

fn parse_bound(text: &str, line: usize) -> Result<Bound, TextError> {
    let text = text.trim();
    if text == "unbounded" {
        return Ok(Bound::Unbounded);
    }
    if let Some(rest) = text.strip_prefix("table") {
        let mut table = Vec::new();
        for part in rest.split(',') {
            let (k, v) = part
                .split_once("->")
                .ok_or_else(|| doc_err(line, "table entries look like `k -> v`"))?;
            let k: u64 = k
                .trim()
                .parse()
                .map_err(|_| doc_err(line, "bad table key"))?;
            let v: u64 = v
                .trim()
                .parse()
                .map_err(|_| doc_err(line, "bad table value"))?;
            table.push((k, v));
        }
        return Ok(Bound::Table(table));
    }
    fn named(name: &str, line: usize) -> Result<BoundingFunction, TextError> {
        match name {
            "id" => Ok(BoundingFunction::Id),
            "exp2" => Ok(BoundingFunction::Exp2),
            "exp2exp2" => Ok(BoundingFunction::DoubleExp2),
            other => Err(doc_err(
                line,
                format!("unknown bounding function `{other}`"),
            )),
        }
    }
    if let Some(rest) = text.strip_prefix("iterate") {
        let mut parts = rest.split_whitespace();
        let f = named(
            parts
                .next()
                .ok_or_else(|| doc_err(line, "iterate needs a function name"))?,
            line,
        )?;
        let n: u32 = parts
            .next()
            .ok_or_else(|| doc_err(line, "iterate needs a count"))?
            .parse()
            .map_err(|_| doc_err(line, "bad iterate count"))?;
        return Ok(Bound::Func(BoundingFunction::Iterate(Box::new(f), n)));
    }
    Ok(Bound::Func(named(text, line)?))
}

/// Parses a projection-spec document. `dir` resolves `formula-file:` paths.
pub fn parse_projection_spec(text: &str, dir: &Path) -> Result<ProjectionSpec, TextError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Base,
        Extended,
    }
    let mut section = Section::None;
    let mut base_lines: Vec<(usize, String)> = Vec::new();
    let mut ext_lines: Vec<(usize, String)> = Vec::new();
    let mut formula_text: Option<String> = None;
    let mut bound: Option<Bound> = None;
    for (n, line) in content_lines(text) {
        if line == "base:" {
            section = Section::Base;
        } else if line == "extended:" {
            section = Section::Extended;
        } else if let Some(rest) = line.strip_prefix("formula-file:") {
            let path = dir.join(rest.trim());
            let loaded = std::fs::read_to_string(&path).map_err(|source| TextError::Io {
                path: path.display().to_string(),
                source,
            })?;
            formula_text = Some(loaded.trim().to_string());
            section = Section::None;
        } else if let Some(rest) = line.strip_prefix("formula:") {
            formula_text = Some(rest.trim().to_string());
            section = Section::None;
        } else if let Some(rest) = line.strip_prefix("bound:") {
            bound = Some(parse_bound(rest, n)?);
            section = Section::None;
        } else {
            match section {
                Section::Base => base_lines.push((n, line.to_string())),
                Section::Extended => ext_lines.push((n, line.to_string())),
                Section::None => return Err(doc_err(n, "declaration outside base:/extended:")),
            }
        }
    }
    let join = |lines: &[(usize, String)]| {
        lines
            .iter()
            .map(|(_, l)| l.clone())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let base = Arc::new(parse_vocabulary(&join(&base_lines))?);
    let extended = Arc::new(parse_vocabulary(&join(&ext_lines))?);
    let formula_text = formula_text
        .ok_or_else(|| doc_err(0, "spec needs a `formula:` or `formula-file:` line"))?;
    let sentence = parse_formula(&formula_text, &extended)?;
    let bound = bound.ok_or_else(|| doc_err(0, "spec needs a `bound:` line"))?;
    Ok(ProjectionSpec::new(base, extended, sentence, bound)?)
}
