//! Satisfaction for the extended logic over finite structures, brute-force
//! model search, finite upward-extension probing, and Skolem expansion.
//!
//! Second-order quantifiers use full semantics: a relation variable of
//! profile (s₁, ..., sₙ) ranges over all subsets of the tuple space, so a
//! quantifier over profile (s) on a domain of n elements examines exactly 2^n
//! candidate sets. On an empty domain the one candidate is the empty set, so
//! `exists2 X:(s) . forall x:s . X(x)` is true on every domain.

use crate::formula::{analyze, Formula, Term};
use crate::logic::{
    size_assignments, LogicError, Relation, Structure, StructureEnumerator, Vocabulary,
};
use std::cell::RefCell;
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("free variable `{0}` is unassigned")]
    FreeVarUnassigned(String),
    #[error("sort error: {0}")]
    Sort(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("empty domain: {0}")]
    EmptyDomain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Hf(#[from] crate::hf::HfError),
}

/// A value bound to a variable: a domain element or a tuple set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Elem(usize, usize),
    TupleSet(Vec<usize>, Relation),
}

/// Assignment for the free variables of a formula. First-order variables map
/// to (sort, element); second-order variables to tuple sets.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    pub values: Vec<(String, Value)>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn bind_elem(mut self, var: &str, sort: usize, elem: usize) -> Self {
        self.values.push((var.to_string(), Value::Elem(sort, elem)));
        self
    }

    pub fn bind_set(mut self, var: &str, profile: Vec<usize>, rel: Relation) -> Self {
        self.values
            .push((var.to_string(), Value::TupleSet(profile, rel)));
        self
    }
}

/// Evaluation limits and optional instrumentation.
pub struct EvalCtx {
    /// Refuse second-order quantification over tuple spaces with more than
    /// this many tuples (2^space candidate sets are examined).
    pub max_so_space: usize,
    /// When set, records the names of vocabulary symbols consulted.
    pub trace: Option<RefCell<BTreeSet<String>>>,
}

impl Default for EvalCtx {
    fn default() -> Self {
        EvalCtx {
            max_so_space: 20,
            trace: None,
        }
    }
}

impl EvalCtx {
    fn touch(&self, name: &str) {
        if let Some(t) = &self.trace {
            t.borrow_mut().insert(name.to_string());
        }
    }
}

/// Truth of φ in A under α, with default limits.
pub fn eval(phi: &Formula, a: &Structure, alpha: &Assignment) -> Result<bool, SemanticsError> {
    eval_with_ctx(phi, a, alpha, &EvalCtx::default())
}

pub fn eval_with_ctx(
    phi: &Formula,
    a: &Structure,
    alpha: &Assignment,
    ctx: &EvalCtx,
) -> Result<bool, SemanticsError> {
    let mut env: Vec<(String, Value)> = alpha.values.clone();
    eval_env(phi, a, &mut env, ctx)
}

fn lookup_value<'e>(env: &'e [(String, Value)], var: &str) -> Option<&'e Value> {
    env.iter().rev().find(|(n, _)| n == var).map(|(_, v)| v)
}

fn eval_term(
    t: &Term,
    a: &Structure,
    env: &[(String, Value)],
    ctx: &EvalCtx,
) -> Result<usize, SemanticsError> {
    match t {
        Term::Var(v) => match lookup_value(env, v) {
            Some(Value::Elem(_, e)) => Ok(*e),
            Some(Value::TupleSet(..)) => Err(SemanticsError::Sort(format!(
                "relation variable `{v}` used as a term"
            ))),
            None => Err(SemanticsError::FreeVarUnassigned(v.clone())),
        },
        Term::Const(c) => {
            ctx.touch(&a.vocabulary().constants[*c].name);
            Ok(a.constant(*c))
        }
        Term::App(f, args) => {
            ctx.touch(&a.vocabulary().functions[*f].name);
            let mut vals = Vec::with_capacity(args.len());
            for arg in args {
                vals.push(eval_term(arg, a, env, ctx)?);
            }
            Ok(a.func(*f).get(&vals))
        }
    }
}

fn advance_relation(rel: &mut Relation) -> bool {
    for i in 0..rel.space() {
        if rel.holds_index(i) {
            rel.set_index(i, false);
        } else {
            rel.set_index(i, true);
            return true;
        }
    }
    false
}

fn eval_env(
    phi: &Formula,
    a: &Structure,
    env: &mut Vec<(String, Value)>,
    ctx: &EvalCtx,
) -> Result<bool, SemanticsError> {
    match phi {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Rel(r, args) => {
            ctx.touch(&a.vocabulary().relations[*r].name);
            let mut vals = Vec::with_capacity(args.len());
            for arg in args {
                vals.push(eval_term(arg, a, env, ctx)?);
            }
            Ok(a.rel(*r).holds(&vals))
        }
        Formula::RelVar(name, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for arg in args {
                vals.push(eval_term(arg, a, env, ctx)?);
            }
            match lookup_value(env, name) {
                Some(Value::TupleSet(_, rel)) => Ok(rel.holds(&vals)),
                Some(Value::Elem(..)) => Err(SemanticsError::Sort(format!(
                    "first-order variable `{name}` applied to arguments"
                ))),
                None => Err(SemanticsError::FreeVarUnassigned(name.clone())),
            }
        }
        Formula::Eq(s, t) => Ok(eval_term(s, a, env, ctx)? == eval_term(t, a, env, ctx)?),
        Formula::Not(f) => Ok(!eval_env(f, a, env, ctx)?),
        Formula::And(f, g) => Ok(eval_env(f, a, env, ctx)? && eval_env(g, a, env, ctx)?),
        Formula::Or(f, g) => Ok(eval_env(f, a, env, ctx)? || eval_env(g, a, env, ctx)?),
        Formula::Implies(f, g) => Ok(!eval_env(f, a, env, ctx)? || eval_env(g, a, env, ctx)?),
        Formula::Iff(f, g) => Ok(eval_env(f, a, env, ctx)? == eval_env(g, a, env, ctx)?),
        Formula::Forall { var, sort, body } => {
            for e in 0..a.sort_size(*sort) {
                env.push((var.clone(), Value::Elem(*sort, e)));
                let ok = eval_env(body, a, env, ctx)?;
                env.pop();
                if !ok {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Exists { var, sort, body } => {
            for e in 0..a.sort_size(*sort) {
                env.push((var.clone(), Value::Elem(*sort, e)));
                let ok = eval_env(body, a, env, ctx)?;
                env.pop();
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Hartig {
            left_var,
            left_sort,
            right_var,
            right_sort,
            left,
            right,
        } => {
            let mut n_left = 0usize;
            for e in 0..a.sort_size(*left_sort) {
                env.push((left_var.clone(), Value::Elem(*left_sort, e)));
                let ok = eval_env(left, a, env, ctx)?;
                env.pop();
                if ok {
                    n_left += 1;
                }
            }
            let mut n_right = 0usize;
            for e in 0..a.sort_size(*right_sort) {
                env.push((right_var.clone(), Value::Elem(*right_sort, e)));
                let ok = eval_env(right, a, env, ctx)?;
                env.pop();
                if ok {
                    n_right += 1;
                }
            }
            Ok(n_left == n_right)
        }
        Formula::Wf { x, y, sort, body } => {
            // on finite structures well-foundedness is acyclicity of the
            // defined relation; the subset-minimal-element reading is kept as
            // a test oracle
            let n = a.sort_size(*sort);
            let mut edges: Vec<(usize, usize)> = Vec::new();
            for ex in 0..n {
                for ey in 0..n {
                    env.push((x.clone(), Value::Elem(*sort, ex)));
                    env.push((y.clone(), Value::Elem(*sort, ey)));
                    let holds = eval_env(body, a, env, ctx)?;
                    env.pop();
                    env.pop();
                    if holds {
                        edges.push((ex, ey));
                    }
                }
            }
            Ok(acyclic_dfs(n, &edges))
        }
        Formula::Forall2 { var, profile, body } => {
            let sizes: Vec<usize> = profile.iter().map(|&s| a.sort_size(s)).collect();
            let space: usize = sizes.iter().product();
            if space > ctx.max_so_space {
                return Err(SemanticsError::ResourceCap(format!(
                    "second-order quantifier over tuple space of size {space} (cap {})",
                    ctx.max_so_space
                )));
            }
            env.push((
                var.clone(),
                Value::TupleSet(profile.clone(), Relation::empty(sizes)),
            ));
            let idx = env.len() - 1;
            let mut all = true;
            loop {
                if !eval_env(body, a, env, ctx)? {
                    all = false;
                    break;
                }
                let Value::TupleSet(_, rel) = &mut env[idx].1 else {
                    unreachable!()
                };
                if !advance_relation(rel) {
                    break;
                }
            }
            env.pop();
            Ok(all)
        }
        Formula::Exists2 { var, profile, body } => {
            let sizes: Vec<usize> = profile.iter().map(|&s| a.sort_size(s)).collect();
            let space: usize = sizes.iter().product();
            if space > ctx.max_so_space {
                return Err(SemanticsError::ResourceCap(format!(
                    "second-order quantifier over tuple space of size {space} (cap {})",
                    ctx.max_so_space
                )));
            }
            env.push((
                var.clone(),
                Value::TupleSet(profile.clone(), Relation::empty(sizes)),
            ));
            let idx = env.len() - 1;
            let mut any = false;
            loop {
                if eval_env(body, a, env, ctx)? {
                    any = true;
                    break;
                }
                let Value::TupleSet(_, rel) = &mut env[idx].1 else {
                    unreachable!()
                };
                if !advance_relation(rel) {
                    break;
                }
            }
            env.pop();
            Ok(any)
        }
    }
}

/// Three-color depth-first cycle detection.
fn acyclic_dfs(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum C {
        White,
        Gray,
        Black,
    }
    let mut color = vec![C::White; n];
    for start in 0..n {
        if color[start] != C::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = C::Gray;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                match color[w] {
                    C::Gray => return false,
                    C::White => {
                        color[w] = C::Gray;
                        stack.push((w, 0));
                    }
                    C::Black => {}
                }
            } else {
                color[v] = C::Black;
                stack.pop();
            }
        }
    }
    true
}

/// All models of the sentence φ with per-sort sizes in the given inclusive
/// ranges, in canonical enumeration order, optionally one per isomorphism
/// class. Errors if more than `cap` structures would be inspected.
pub fn find_models(
    phi: &Formula,
    vocab: &Arc<Vocabulary>,
    ranges: &[(usize, usize)],
    up_to_iso: bool,
    cap: usize,
) -> Result<Vec<Structure>, SemanticsError> {
    let analysis = analyze(phi, vocab);
    if !analysis.free_first_order.is_empty() || !analysis.free_second_order.is_empty() {
        return Err(SemanticsError::Precondition(format!(
            "find_models requires a sentence; free variables: {:?}",
            analysis.free_first_order
        )));
    }
    let mut out = Vec::new();
    let mut inspected = 0usize;
    let alpha = Assignment::new();
    for sizes in size_assignments(ranges) {
        for s in StructureEnumerator::new(vocab.clone(), &sizes, up_to_iso) {
            inspected += 1;
            if inspected > cap {
                return Err(SemanticsError::ResourceCap(format!(
                    "model search inspected more than {cap} structures"
                )));
            }
            if eval(phi, &s, &alpha)? {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Searches for a superstructure B ⊇ A with total size `target` satisfying φ.
///
/// A's atoms and interpretations are preserved exactly; candidate extensions
/// are enumerated in canonical order (size distribution over sorts, then the
/// interpretation odometer over the new slots), so the first hit is the
/// canonical-least witness.
pub fn upward_extension_probe(
    phi: &Formula,
    a: &Structure,
    target: usize,
    cap: usize,
) -> Result<Option<Structure>, SemanticsError> {
    let alpha = Assignment::new();
    if !eval(phi, a, &alpha)? {
        return Err(SemanticsError::Precondition(
            "the base structure does not satisfy the sentence".into(),
        ));
    }
    let base_total = a.total_size();
    if target < base_total {
        return Err(SemanticsError::Precondition(format!(
            "target {target} is smaller than the base structure ({base_total})"
        )));
    }
    if target > cap {
        return Err(SemanticsError::Precondition(format!(
            "target {target} exceeds the cap {cap}"
        )));
    }
    let vocab = a.vocabulary().clone();
    let n_sorts = vocab.sorts.len();
    let extra = target - base_total;
    for dist in compositions(extra, n_sorts) {
        // extended domains with fresh names appended
        let mut domains: Vec<Vec<String>> = Vec::with_capacity(n_sorts);
        for (s, add) in dist.iter().enumerate() {
            let mut names = a.element_names(s).to_vec();
            let mut i = names.len();
            while names.len() < a.sort_size(s) + add {
                let candidate = format!("{}{}", vocab.sorts[s], i);
                if !names.contains(&candidate) {
                    names.push(candidate);
                }
                i += 1;
            }
            domains.push(names);
        }
        let Ok(mut b) = Structure::new(vocab.clone(), domains) else {
            continue;
        };
        // copy A's interpretations onto the old atoms
        for (id, decl) in vocab.relations.iter().enumerate() {
            for t in a.rel(id).tuples() {
                b.rel_mut(id).set(&t, true);
            }
            let _ = decl;
        }
        let mut fixed_func_entries: Vec<Vec<usize>> = Vec::new();
        for (id, decl) in vocab.functions.iter().enumerate() {
            let old_sizes: Vec<usize> = decl.args.iter().map(|&s| a.sort_size(s)).collect();
            let mut fixed = Vec::new();
            for t in crate::logic::tuple_space(&old_sizes) {
                b.func_mut(id).set(&t, a.func(id).get(&t));
                fixed.push(func_index(&b, id, &t));
            }
            fixed_func_entries.push(fixed);
        }
        for id in 0..vocab.constants.len() {
            b.set_constant(id, a.constant(id));
        }
        // free slots: relation tuples touching a new atom, function entries
        // with a new argument
        let mut free_rel_slots: Vec<(usize, usize)> = Vec::new();
        for (id, decl) in vocab.relations.iter().enumerate() {
            let new_sizes: Vec<usize> = decl.args.iter().map(|&s| b.sort_size(s)).collect();
            for (i, t) in crate::logic::tuple_space(&new_sizes).iter().enumerate() {
                let all_old = t.iter().zip(&decl.args).all(|(&e, &s)| e < a.sort_size(s));
                if !all_old {
                    free_rel_slots.push((id, i));
                }
            }
        }
        let mut free_func_slots: Vec<(usize, usize, usize)> = Vec::new(); // (id, entry, radix)
        for (id, decl) in vocab.functions.iter().enumerate() {
            let new_sizes: Vec<usize> = decl.args.iter().map(|&s| b.sort_size(s)).collect();
            for (i, t) in crate::logic::tuple_space(&new_sizes).iter().enumerate() {
                let all_old = t.iter().zip(&decl.args).all(|(&e, &s)| e < a.sort_size(s));
                if !all_old {
                    free_func_slots.push((id, i, b.sort_size(decl.result)));
                }
            }
        }
        // odometer over the free slots only
        let mut count = 0usize;
        loop {
            count += 1;
            if count > 200_000_000 {
                return Err(SemanticsError::ResourceCap(
                    "extension search exceeded the candidate cap".into(),
                ));
            }
            if eval(phi, &b, &alpha)? {
                // the identity on A's atoms is a substructure embedding into
                // every returned witness
                let identity = crate::logic::Embedding {
                    maps: (0..n_sorts)
                        .map(|s| (0..a.sort_size(s)).collect())
                        .collect(),
                };
                assert!(identity.is_valid(a, &b), "extension broke the base");
                return Ok(Some(b));
            }
            if !advance_free_slots(&mut b, &free_rel_slots, &free_func_slots) {
                break;
            }
        }
    }
    Ok(None)
}

fn func_index(s: &Structure, id: usize, args: &[usize]) -> usize {
    let decl = &s.vocabulary().functions[id];
    let mut idx = 0usize;
    for (&a, &sort) in args.iter().zip(&decl.args) {
        idx = idx * s.sort_size(sort) + a;
    }
    idx
}

fn advance_free_slots(
    b: &mut Structure,
    rel_slots: &[(usize, usize)],
    func_slots: &[(usize, usize, usize)],
) -> bool {
    for &(id, i) in rel_slots {
        let rel = b.rel_mut(id);
        if rel.holds_index(i) {
            rel.set_index(i, false);
        } else {
            rel.set_index(i, true);
            return true;
        }
    }
    for &(id, i, radix) in func_slots {
        let data = b.func_mut(id).data_mut();
        if data[i] + 1 < radix {
            data[i] += 1;
            return true;
        }
        data[i] = 0;
    }
    false
}

/// All ways to write `total` as an ordered sum of `parts` naturals, in
/// lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    fn rec(total: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=total {
            cur.push(first);
            rec(total - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Skolem expansion
// ---------------------------------------------------------------------------

/// One generated witness function: `f(z̄)` is the least x with ψ(x, z̄), or
/// the least element of the domain when no witness exists.
#[derive(Debug, Clone)]
pub struct SkolemEntry {
    pub func_id: usize,
    pub name: String,
    pub arity: usize,
    /// Quantifier-free ψ(x, z1, ..., zn) over the membership vocabulary.
    pub psi: Formula,
}

#[derive(Debug, Clone)]
pub struct SkolemExpansion {
    pub structure: Structure,
    pub entries: Vec<SkolemEntry>,
}

impl SkolemExpansion {
    /// The witness axiom ∀z̄ (∃x ψ(x, z̄) → ψ(f(z̄), z̄)) for one entry.
    pub fn axiom(&self, entry: &SkolemEntry) -> Formula {
        let zs: Vec<String> = (1..=entry.arity).map(|i| format!("z{i}")).collect();
        let f_args: Vec<Term> = zs.iter().map(|z| Term::Var(z.clone())).collect();
        let witnessed = substitute_var(&entry.psi, "x", &Term::App(entry.func_id, f_args));
        let premise = Formula::Exists {
            var: "x".to_string(),
            sort: 0,
            body: Box::new(entry.psi.clone()),
        };
        let mut body = Formula::Implies(Box::new(premise), Box::new(witnessed));
        for z in zs.iter().rev() {
            body = Formula::Forall {
                var: z.clone(),
                sort: 0,
                body: Box::new(body),
            };
        }
        body
    }

    pub fn axioms(&self) -> Vec<Formula> {
        self.entries.iter().map(|e| self.axiom(e)).collect()
    }
}

/// Replaces every free occurrence of `var` by `replacement` (the generated
/// formulas are quantifier-free, so capture is not an issue).
pub fn substitute_var(phi: &Formula, var: &str, replacement: &Term) -> Formula {
    fn sub_term(t: &Term, var: &str, replacement: &Term) -> Term {
        match t {
            Term::Var(v) if v == var => replacement.clone(),
            Term::Var(_) | Term::Const(_) => t.clone(),
            Term::App(f, args) => Term::App(
                *f,
                args.iter().map(|a| sub_term(a, var, replacement)).collect(),
            ),
        }
    }
    match phi {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Rel(r, args) => Formula::Rel(
            *r,
            args.iter().map(|a| sub_term(a, var, replacement)).collect(),
        ),
        Formula::RelVar(n, args) => Formula::RelVar(
            n.clone(),
            args.iter().map(|a| sub_term(a, var, replacement)).collect(),
        ),
        Formula::Eq(a, b) => {
            Formula::Eq(sub_term(a, var, replacement), sub_term(b, var, replacement))
        }
        Formula::Not(a) => Formula::Not(Box::new(substitute_var(a, var, replacement))),
        Formula::And(a, b) => Formula::And(
            Box::new(substitute_var(a, var, replacement)),
            Box::new(substitute_var(b, var, replacement)),
        ),
        Formula::Or(a, b) => Formula::Or(
            Box::new(substitute_var(a, var, replacement)),
            Box::new(substitute_var(b, var, replacement)),
        ),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(substitute_var(a, var, replacement)),
            Box::new(substitute_var(b, var, replacement)),
        ),
        Formula::Iff(a, b) => Formula::Iff(
            Box::new(substitute_var(a, var, replacement)),
            Box::new(substitute_var(b, var, replacement)),
        ),
        Formula::Forall { var: v, sort, body } => Formula::Forall {
            var: v.clone(),
            sort: *sort,
            body: if v == var {
                body.clone()
            } else {
                Box::new(substitute_var(body, var, replacement))
            },
        },
        Formula::Exists { var: v, sort, body } => Formula::Exists {
            var: v.clone(),
            sort: *sort,
            body: if v == var {
                body.clone()
            } else {
                Box::new(substitute_var(body, var, replacement))
            },
        },
        other => other.clone(),
    }
}

/// The fixed probe structure used to deduplicate generated formulas by
/// semantic equivalence: three elements with E = {(0,0), (0,1), (1,2)} and
/// c = 0. Deduplication on a probe may conflate globally inequivalent
/// formulas; the survivors are a generating set, not a complete basis.
fn skolem_probe(vocab: &Arc<Vocabulary>) -> Structure {
    let mut p = Structure::new_with_sizes(vocab.clone(), &[3]).expect("probe");
    p.rel_mut(0).set(&[0, 0], true);
    p.rel_mut(0).set(&[0, 1], true);
    p.rel_mut(0).set(&[1, 2], true);
    p.set_constant(0, 0);
    p
}

/// Expands a structure over one sort with a binary relation `E` and a
/// constant `c` by canonical witness functions for every generated
/// quantifier-free formula ψ(x, z1, ..., zn) with n ≤ `max_vars`.
///
/// Generated formulas: conjunctions of at most two clauses, each a
/// disjunction of at most two literals over the atoms E(u, v), u = v, u = c
/// (u, v among the variables), deduplicated by semantic equivalence on the
/// probe structure. `true` is included, so every expansion has a plain
/// least-element function per arity.
pub fn skolem_expand(m: &Structure, max_vars: usize) -> Result<SkolemExpansion, SemanticsError> {
    let vocab = m.vocabulary();
    let shape_ok = vocab.sorts.len() == 1
        && vocab.relations.len() == 1
        && vocab.relations[0].args.len() == 2
        && vocab.functions.is_empty()
        && vocab.constants.len() == 1;
    if !shape_ok {
        return Err(SemanticsError::Sort(
            "skolem_expand expects one sort, one binary relation, one constant".into(),
        ));
    }
    if m.sort_size(0) == 0 {
        return Err(SemanticsError::EmptyDomain(
            "no default element is available for witness functions".into(),
        ));
    }
    let sort_name = vocab.sorts[0].clone();
    let probe = skolem_probe(vocab);

    let mut per_arity: Vec<Vec<Formula>> = Vec::new();
    for n in 0..=max_vars {
        per_arity.push(generate_psis(n, &probe));
    }

    // extended vocabulary: sk<arity>_<index> functions
    let mut builder = Vocabulary::builder()
        .sort(&sort_name)
        .relation(&vocab.relations[0].name, &[&sort_name, &sort_name]);
    let arg_names: Vec<&str> = vec![&sort_name; max_vars];
    for (n, psis) in per_arity.iter().enumerate() {
        for i in 0..psis.len() {
            builder = builder.function(&format!("sk{n}_{i}"), &arg_names[..n], &sort_name);
        }
    }
    builder = builder.constant(&vocab.constants[0].name, &sort_name);
    let ext_vocab = Arc::new(builder.build().map_err(SemanticsError::Logic)?);

    let mut expanded = m.expand(&ext_vocab, &[])?;
    let domain = m.sort_size(0);
    let mut entries = Vec::new();
    for (n, psis) in per_arity.iter().enumerate() {
        for (i, psi) in psis.iter().enumerate() {
            let name = format!("sk{n}_{i}");
            let func_id = ext_vocab.function_id(&name).expect("declared above");
            let zs: Vec<String> = (1..=n).map(|k| format!("z{k}")).collect();
            for args in crate::logic::tuple_space(&vec![domain; n]) {
                let mut alpha = Assignment::new();
                for (z, &e) in zs.iter().zip(&args) {
                    alpha = alpha.bind_elem(z, 0, e);
                }
                // canonical-least witness, else the least element
                let mut value = 0usize;
                for x in 0..domain {
                    let alpha_x = alpha.clone().bind_elem("x", 0, x);
                    if eval(psi, m, &alpha_x)? {
                        value = x;
                        break;
                    }
                }
                expanded.func_mut(func_id).set(&args, value);
            }
            entries.push(SkolemEntry {
                func_id,
                name,
                arity: n,
                psi: psi.clone(),
            });
        }
    }
    Ok(SkolemExpansion {
        structure: expanded,
        entries,
    })
}

/// All clauses (≤ 2 literals) and conjunctions of two clauses over the atom
/// set for arity n, deduplicated by truth table on the probe.
fn generate_psis(n: usize, probe: &Structure) -> Vec<Formula> {
    let mut vars = vec!["x".to_string()];
    for k in 1..=n {
        vars.push(format!("z{k}"));
    }
    let mut atoms: Vec<Formula> = Vec::new();
    for u in &vars {
        for v in &vars {
            atoms.push(Formula::Rel(
                0,
                vec![Term::Var(u.clone()), Term::Var(v.clone())],
            ));
        }
    }
    for (i, u) in vars.iter().enumerate() {
        for v in &vars[i + 1..] {
            atoms.push(Formula::Eq(Term::Var(u.clone()), Term::Var(v.clone())));
        }
    }
    for u in &vars {
        atoms.push(Formula::Eq(Term::Var(u.clone()), Term::Const(0)));
    }

    let literals: Vec<Formula> = atoms
        .iter()
        .cloned()
        .chain(atoms.iter().map(|a| Formula::Not(Box::new(a.clone()))))
        .collect();
    let mut clauses: Vec<Formula> = literals.clone();
    for i in 0..literals.len() {
        for j in (i + 1)..literals.len() {
            clauses.push(Formula::Or(
                Box::new(literals[i].clone()),
                Box::new(literals[j].clone()),
            ));
        }
    }
    let mut candidates: Vec<Formula> = vec![Formula::True];
    candidates.extend(clauses.iter().cloned());
    for i in 0..clauses.len() {
        for j in (i + 1)..clauses.len() {
            candidates.push(Formula::And(
                Box::new(clauses[i].clone()),
                Box::new(clauses[j].clone()),
            ));
        }
    }

    // truth-table signature over all assignments on the probe
    let probe_size = probe.sort_size(0);
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut out = Vec::new();
    for psi in candidates {
        let mut sig = Vec::new();
        for assignment in crate::logic::tuple_space(&vec![probe_size; n + 1]) {
            let mut alpha = Assignment::new().bind_elem("x", 0, assignment[0]);
            for (k, &e) in assignment[1..].iter().enumerate() {
                alpha = alpha.bind_elem(&format!("z{}", k + 1), 0, e);
            }
            sig.push(eval(&psi, probe, &alpha).expect("probe eval"));
        }
        if seen.insert(sig) {
            out.push(psi);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::logic::Vocabulary;

    fn unary() -> Arc<Vocabulary> {
        Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("P", &["s"])
                .build()
                .unwrap(),
        )
    }

    fn graph() -> Arc<Vocabulary> {
        Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("E", &["s", "s"])
                .build()
                .unwrap(),
        )
    }

    fn p_structure(n: usize, p: &[usize]) -> Structure {
        let mut s = Structure::new_with_sizes(unary(), &[n]).unwrap();
        for &e in p {
            s.rel_mut(0).set(&[e], true);
        }
        s
    }

    fn e_structure(n: usize, edges: &[(usize, usize)]) -> Structure {
        let mut s = Structure::new_with_sizes(graph(), &[n]).unwrap();
        for &(a, b) in edges {
            s.rel_mut(0).set(&[a, b], true);
        }
        s
    }

    #[test]
    fn hartig_examples() {
        let v = unary();
        let phi = parse("I x y (P(x)) (!P(y))", &v).unwrap();
        let alpha = Assignment::new();
        assert!(eval(&phi, &p_structure(2, &[0]), &alpha).unwrap());
        assert!(!eval(&phi, &p_structure(3, &[0]), &alpha).unwrap());
    }

    #[test]
    fn hartig_matches_direct_counting_exhaustively() {
        let v = unary();
        let phi = parse("I x y (P(x)) (!P(y))", &v).unwrap();
        let alpha = Assignment::new();
        for n in 0..=6usize {
            for mask in 0u32..(1 << n) {
                let p: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let s = p_structure(n, &p);
                let expected = p.len() == n - p.len();
                assert_eq!(
                    eval(&phi, &s, &alpha).unwrap(),
                    expected,
                    "n={n} mask={mask}"
                );
            }
        }
    }

    /// Oracle: every nonempty subset has a minimal element.
    fn minimal_element_oracle(n: usize, edges: &[(usize, usize)]) -> bool {
        for mask in 1u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let has_min = subset
                .iter()
                .any(|&m| subset.iter().all(|&x| !edges.contains(&(x, m))));
            if !has_min {
                return false;
            }
        }
        true
    }

    #[test]
    fn wf_examples_and_oracle() {
        let v = graph();
        let phi = parse("WF x y (E(x, y))", &v).unwrap();
        let alpha = Assignment::new();
        assert!(!eval(&phi, &e_structure(2, &[(0, 1), (1, 0)]), &alpha).unwrap());
        assert!(eval(&phi, &e_structure(2, &[(0, 1)]), &alpha).unwrap());
        // exhaustive on ≤ 3 atoms (the acceptance suite does 4)
        for n in 0..=3usize {
            for mask in 0u32..(1 << (n * n)) {
                let edges: Vec<(usize, usize)> = (0..n * n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| (i / n.max(1), i % n.max(1)))
                    .collect();
                let s = e_structure(n, &edges);
                let got = eval(&phi, &s, &alpha).unwrap();
                assert_eq!(got, minimal_element_oracle(n, &edges), "n={n} mask={mask}");
            }
        }
    }

    #[test]
    fn second_order_conventions() {
        let v = graph();
        let full = parse("exists2 X:(s) . forall x:s . X(x)", &v).unwrap();
        let alpha = Assignment::new();
        // the full set always exists, including the empty set on the empty domain
        assert!(eval(&full, &e_structure(0, &[]), &alpha).unwrap());
        assert!(eval(&full, &e_structure(3, &[]), &alpha).unwrap());
        let nonempty = parse("exists2 X:(s) . exists x:s . X(x)", &v).unwrap();
        assert!(!eval(&nonempty, &e_structure(0, &[]), &alpha).unwrap());
        assert!(eval(&nonempty, &e_structure(2, &[]), &alpha).unwrap());
        // ∀X ∃x X(x) fails: the empty set is a candidate
        let all_inhabited = parse("forall2 X:(s) . exists x:s . X(x)", &v).unwrap();
        assert!(!eval(&all_inhabited, &e_structure(2, &[]), &alpha).unwrap());
    }

    #[test]
    fn free_second_order_variables_come_from_the_assignment() {
        // X bound to P's tuple set makes ∀x (X(x) ↔ P(x)) true
        let s = p_structure(3, &[1]);
        let body = Formula::Iff(
            Box::new(Formula::RelVar("X".into(), vec![Term::Var("x".into())])),
            Box::new(Formula::Rel(0, vec![Term::Var("x".into())])),
        );
        let phi = Formula::Forall {
            var: "x".into(),
            sort: 0,
            body: Box::new(body),
        };
        let mut same = Relation::empty(vec![3]);
        same.set(&[1], true);
        let alpha = Assignment::new().bind_set("X", vec![0], same);
        assert!(eval(&phi, &s, &alpha).unwrap());
        let mut different = Relation::empty(vec![3]);
        different.set(&[2], true);
        let alpha = Assignment::new().bind_set("X", vec![0], different);
        assert!(!eval(&phi, &s, &alpha).unwrap());
        // unbound relation variable
        assert_eq!(
            eval(&phi, &s, &Assignment::new()),
            Err(SemanticsError::FreeVarUnassigned("X".into()))
        );
    }

    #[test]
    fn unassigned_free_variable_is_reported() {
        let v = unary();
        let phi = parse("P(x)", &v).unwrap();
        let s = p_structure(2, &[0]);
        assert_eq!(
            eval(&phi, &s, &Assignment::new()),
            Err(SemanticsError::FreeVarUnassigned("x".into()))
        );
    }

    #[test]
    fn find_models_respects_the_cap() {
        let v = graph();
        let taut = parse("true", &v).unwrap();
        let err = find_models(&taut, &v, &[(0, 3)], false, 10);
        assert!(matches!(err, Err(SemanticsError::ResourceCap(_))));
    }

    #[test]
    fn so_resource_cap() {
        let v = graph();
        let phi = parse("exists2 X:(s, s) . forall x:s . X(x, x)", &v).unwrap();
        let s = e_structure(5, &[]);
        let ctx = EvalCtx {
            max_so_space: 20,
            ..Default::default()
        };
        let err = eval_with_ctx(&phi, &s, &Assignment::new(), &ctx);
        assert!(matches!(err, Err(SemanticsError::ResourceCap(_))));
    }

    #[test]
    fn find_models_examples() {
        let v = graph();
        let all_equal = parse("forall x:s . forall y:s . x = y", &v).unwrap();
        let models = find_models(&all_equal, &v, &[(0, 3)], false, 10_000).unwrap();
        let sizes: Vec<usize> = models.iter().map(|m| m.total_size()).collect();
        assert!(sizes.iter().all(|&n| n <= 1));
        // sizes 0 and 1: all four E-interpretations at size ≤ 1 qualify
        assert_eq!(
            models.len(),
            3,
            "size 0 (1 structure) + size 1 (2 structures)"
        );

        let ext = parse(
            "forall x:s . forall y:s . ((forall z:s . (E(z, x) <-> E(z, y))) -> x = y)",
            &v,
        )
        .unwrap();
        let models = find_models(&ext, &v, &[(2, 2)], false, 10_000).unwrap();
        for m in &models {
            let e = m.rel(0);
            let row0: Vec<bool> = (0..2).map(|z| e.holds(&[z, 0])).collect();
            let row1: Vec<bool> = (0..2).map(|z| e.holds(&[z, 1])).collect();
            assert_ne!(row0, row1);
        }
        assert_eq!(models.len(), 12, "16 structures minus 4 with equal columns");

        let unsat = parse("exists x:s . x != x", &v).unwrap();
        assert!(find_models(&unsat, &v, &[(0, 3)], false, 10_000)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn probe_examples() {
        let v = graph();
        let taut = parse("true", &v).unwrap();
        let a = e_structure(2, &[(0, 1)]);
        let b = upward_extension_probe(&taut, &a, 3, 10).unwrap().unwrap();
        assert_eq!(b.total_size(), 3);
        // the canonical-least extension keeps relations minimal
        assert_eq!(b.rel(0).count(), 1);

        let all_equal = parse("forall x:s . forall y:s . x = y", &v).unwrap();
        let single = e_structure(1, &[]);
        assert!(upward_extension_probe(&all_equal, &single, 2, 10)
            .unwrap()
            .is_none());

        let strict_linear = parse(
            "(forall x:s . !E(x, x)) \
             & (forall x:s . forall y:s . forall z:s . ((E(x, y) & E(y, z)) -> E(x, z))) \
             & (forall x:s . forall y:s . (x != y -> (E(x, y) | E(y, x))))",
            &v,
        )
        .unwrap();
        let chain2 = e_structure(2, &[(0, 1)]);
        let ext = upward_extension_probe(&strict_linear, &chain2, 4, 10)
            .unwrap()
            .expect("a 4-element linear order extending the chain");
        assert!(eval(&strict_linear, &ext, &Assignment::new()).unwrap());
        assert!(ext.rel(0).holds(&[0, 1]), "old atoms preserved");

        // precondition: the base must satisfy the sentence
        let err = upward_extension_probe(&all_equal, &chain2, 3, 10);
        assert!(matches!(err, Err(SemanticsError::Precondition(_))));
    }

    fn membership_vocab() -> Arc<Vocabulary> {
        Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("E", &["s", "s"])
                .constant("c", "s")
                .build()
                .unwrap(),
        )
    }

    /// The element set of V_2 = {∅, {∅}} plus {{∅}} and {∅,{∅}} as a
    /// membership structure: atoms in canonical order with E = real ∈.
    fn v3_structure() -> Structure {
        // atoms: 0=∅, 1={∅}, 2={{∅}}, 3={∅,{∅}}
        let mut s = Structure::new_with_sizes(membership_vocab(), &[4]).unwrap();
        for (a, b) in [(0usize, 1usize), (1, 2), (0, 3), (1, 3)] {
            s.rel_mut(0).set(&[a, b], true);
        }
        s.set_constant(0, 0);
        s
    }

    #[test]
    fn skolem_examples() {
        let m = v3_structure();
        let exp = skolem_expand(&m, 1).unwrap();
        // the trivial formula gets the least element as its constant witness
        let trivial = exp
            .entries
            .iter()
            .find(|e| e.arity == 0 && e.psi == Formula::True)
            .expect("true is generated");
        assert_eq!(exp.structure.func(trivial.func_id).get(&[]), 0);

        // ψ(x, z) = E(x, z): the witness at z = {∅} (atom 1) is ∅ (atom 0);
        // at z = ∅ (no predecessor) the default element 0 is used
        let pred = exp
            .entries
            .iter()
            .find(|e| {
                e.arity == 1
                    && e.psi == Formula::Rel(0, vec![Term::Var("x".into()), Term::Var("z1".into())])
            })
            .expect("E(x, z1) survives deduplication");
        assert_eq!(exp.structure.func(pred.func_id).get(&[1]), 0);
        assert_eq!(exp.structure.func(pred.func_id).get(&[0]), 0, "default");

        // every witness axiom holds in the expansion
        for entry in &exp.entries {
            let ax = exp.axiom(entry);
            assert!(
                eval(&ax, &exp.structure, &Assignment::new()).unwrap(),
                "axiom fails for {}",
                entry.name
            );
        }
    }

    #[test]
    fn skolem_empty_domain() {
        let m = Structure::new_with_sizes(graph(), &[0]).unwrap();
        // no constant is even possible; build the right vocab by hand
        let err = skolem_expand(&m, 0);
        assert!(err.is_err());
    }

    #[test]
    fn skolem_pointwise_extension_gives_sigma1_agreement() {
        // Where the larger structure's witness functions extend the smaller
        // one's pointwise, the two agree on ∃x ψ(x, params) for parameters in
        // the smaller structure. Swept over all transitive pairs inside the
        // third cumulative level, encoded with c = ∅ as atom 0.
        let caps = crate::hf::HfCaps::default();
        let v3 = crate::hf::v_level(3, &caps).unwrap();
        let models = crate::hf::transitive_submodels(v3.elements());
        let encode = |m: &crate::hf::TransitiveModel| {
            let mut s = Structure::new_with_sizes(membership_vocab(), &[m.card()]).unwrap();
            for (i, x) in m.carrier().iter().enumerate() {
                for (j, y) in m.carrier().iter().enumerate() {
                    if y.contains(x) {
                        s.rel_mut(0).set(&[i, j], true);
                    }
                }
            }
            s.set_constant(0, 0);
            s
        };
        let mut checked = 0;
        for small in models.iter().filter(|m| m.card() > 0) {
            for large in models.iter().filter(|m| m.card() > 0) {
                let subset = small
                    .carrier()
                    .iter()
                    .all(|x| large.carrier().binary_search(x).is_ok());
                // atoms of the smaller carrier keep their indices in the
                // larger one only when it extends at the top
                let prefix = subset
                    && large.carrier()[..small.card()]
                        .iter()
                        .zip(small.carrier())
                        .all(|(a, b)| a == b);
                if !prefix {
                    continue;
                }
                let em = skolem_expand(&encode(small), 1).unwrap();
                let en = skolem_expand(&encode(large), 1).unwrap();
                for (e_m, e_n) in em.entries.iter().zip(&en.entries) {
                    assert_eq!(e_m.psi, e_n.psi, "generation is deterministic");
                    if e_m.arity != 1 {
                        continue;
                    }
                    for param in 0..small.card() {
                        let fm = em.structure.func(e_m.func_id).get(&[param]);
                        let fn_ = en.structure.func(e_n.func_id).get(&[param]);
                        if fm != fn_ {
                            continue; // not a pointwise extension here
                        }
                        let exists = Formula::Exists {
                            var: "x".into(),
                            sort: 0,
                            body: Box::new(e_m.psi.clone()),
                        };
                        let alpha = Assignment::new().bind_elem("z1", 0, param);
                        let in_m = eval(&exists, &em.structure, &alpha).unwrap();
                        let in_n = eval(&exists, &en.structure, &alpha).unwrap();
                        assert_eq!(in_m, in_n, "ψ = {:?}, param = {param}", e_m.psi);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 200, "only {checked} pointwise-extension cases");
    }

    #[test]
    fn symbol_trace_is_minimal() {
        // evaluation consults exactly the symbols reported by analysis
        let v = Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("P", &["s"])
                .relation("Q", &["s"])
                .constant("c", "s")
                .build()
                .unwrap(),
        );
        let mut s = Structure::new_with_sizes(v.clone(), &[3]).unwrap();
        s.rel_mut(0).set(&[1], true);
        s.rel_mut(1).set(&[2], true);
        let phi = parse("forall x:s . (P(x) | !P(x))", &v).unwrap();
        let ctx = EvalCtx {
            trace: Some(RefCell::new(BTreeSet::new())),
            ..Default::default()
        };
        eval_with_ctx(&phi, &s, &Assignment::new(), &ctx).unwrap();
        let touched = ctx.trace.unwrap().into_inner();
        let reported = analyze(&phi, &v).symbols;
        assert!(
            touched.is_subset(&reported),
            "touched {touched:?} ⊄ reported {reported:?}"
        );
    }
}
