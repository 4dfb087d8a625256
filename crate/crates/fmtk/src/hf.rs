//! Miniature set-theoretic universe: canonical hereditarily finite sets,
//! cumulative `V_n` levels, transitive closure and rank, Mostowski collapse,
//! and evaluation of ∈-formulas relativized to transitive models.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. The canonical order on sets is: first by rank, then by the
//! lexicographic order of the (canonically sorted) element lists. Members of a
//! set always have strictly smaller rank, so they strictly precede the set in
//! this order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

/// Errors from universe construction and ∈-formula evaluation.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum HfError {
    /// A computation would exceed a configured resource cap.
    #[error("resource cap exceeded: {0}")]
    ResourceLimit(String),
    /// The input relation has a cycle, so it admits no collapse.
    #[error("relation is not well-founded: cycle through atom {0}")]
    NotWellFounded(usize),
    /// Two distinct atoms have identical predecessor sets.
    #[error("relation is not extensional: atoms {0} and {1} have equal predecessor sets")]
    NotExtensional(usize, usize),
    /// The carrier of a transitive model must contain the members of its members.
    #[error("carrier is not transitive: missing {0}")]
    NotTransitive(String),
    #[error("free variable {0} is unassigned")]
    FreeVarUnassigned(String),
    #[error("assigned value for {0} is not a member of the model")]
    ValueOutsideModel(String),
    #[error("set syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// A canonical, immutable hereditarily finite set.
///
/// The element list is sorted in canonical order and deduplicated, so two
/// `HfSet`s are equal iff they are equal as sets.
#[derive(Clone)]
pub struct HfSet {
    rank: u32,
    elements: Arc<[HfSet]>,
}

impl HfSet {
    /// The empty set.
    pub fn empty() -> Self {
        HfSet {
            rank: 0,
            elements: Arc::from(Vec::new()),
        }
    }

    /// Builds a set from arbitrary elements, sorting and deduplicating.
    pub fn from_vec(mut elements: Vec<HfSet>) -> Self {
        elements.sort();
        elements.dedup();
        let rank = elements.iter().map(|e| e.rank + 1).max().unwrap_or(0);
        HfSet {
            rank,
            elements: Arc::from(elements),
        }
    }

    pub fn singleton(x: HfSet) -> Self {
        Self::from_vec(vec![x])
    }

    /// The unordered pair {x, y}.
    pub fn pair(x: HfSet, y: HfSet) -> Self {
        Self::from_vec(vec![x, y])
    }

    /// The Kuratowski ordered pair {{x}, {x, y}}.
    pub fn kuratowski(x: HfSet, y: HfSet) -> Self {
        Self::pair(Self::singleton(x.clone()), Self::pair(x, y))
    }

    /// Decodes a Kuratowski pair, if this set is one.
    pub fn decode_kuratowski(&self) -> Option<(HfSet, HfSet)> {
        match self.elements.len() {
            1 => {
                // {{x}} encodes (x, x)
                let inner = &self.elements[0];
                if inner.card() == 1 {
                    let x = inner.elements[0].clone();
                    Some((x.clone(), x))
                } else {
                    None
                }
            }
            2 => {
                // one element must be {x}, the other {x, y}; the canonical
                // order does not decide which comes first
                let decode = |s: &HfSet, d: &HfSet| -> Option<(HfSet, HfSet)> {
                    if s.card() != 1 || d.card() != 2 {
                        return None;
                    }
                    let x = s.elements[0].clone();
                    if !d.contains(&x) {
                        return None;
                    }
                    let y = d.elements.iter().find(|e| **e != x)?.clone();
                    Some((x, y))
                };
                decode(&self.elements[0], &self.elements[1])
                    .or_else(|| decode(&self.elements[1], &self.elements[0]))
            }
            _ => None,
        }
    }

    /// The von Neumann natural n = {0, 1, ..., n-1}.
    pub fn von_neumann(n: usize) -> Self {
        let mut cur = Self::empty();
        let mut all = Vec::new();
        for _ in 0..n {
            all.push(cur.clone());
            cur = Self::from_vec(all.clone());
        }
        cur
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Number of elements (not hereditary size).
    pub fn card(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HfSet] {
        &self.elements
    }

    pub fn contains(&self, x: &HfSet) -> bool {
        self.elements.binary_search(x).is_ok()
    }

    pub fn is_subset_of(&self, other: &HfSet) -> bool {
        self.elements.iter().all(|e| other.contains(e))
    }

    /// Union of all elements: ⋃x.
    pub fn union_all(&self) -> HfSet {
        let mut v = Vec::new();
        for e in self.elements.iter() {
            v.extend(e.elements.iter().cloned());
        }
        Self::from_vec(v)
    }

    pub fn union(&self, other: &HfSet) -> HfSet {
        let mut v: Vec<HfSet> = self.elements.to_vec();
        v.extend(other.elements.iter().cloned());
        Self::from_vec(v)
    }

    /// The true power set. Errors past the node cap (2^card sets are created).
    pub fn powerset(&self, max_nodes: usize) -> Result<HfSet, HfError> {
        let n = self.elements.len();
        if n >= 64 || (1usize << n) > max_nodes {
            return Err(HfError::ResourceLimit(format!(
                "power set of a {n}-element set exceeds the node cap {max_nodes}"
            )));
        }
        let mut subsets = Vec::with_capacity(1 << n);
        for mask in 0u64..(1u64 << n) {
            let members: Vec<HfSet> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| self.elements[i].clone())
                .collect();
            subsets.push(HfSet::from_vec(members));
        }
        Ok(HfSet::from_vec(subsets))
    }

    /// True iff every member's members are again members.
    pub fn is_transitive_set(&self) -> bool {
        self.elements
            .iter()
            .all(|e| e.elements.iter().all(|w| self.contains(w)))
    }

    /// True iff this is a von Neumann natural (equivalently, a finite ordinal).
    pub fn is_finite_ordinal(&self) -> bool {
        *self == HfSet::von_neumann(self.card())
    }
}

impl PartialEq for HfSet {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.elements, &other.elements) {
            return true;
        }
        self.rank == other.rank && self.elements == other.elements
    }
}

impl Eq for HfSet {}

impl PartialOrd for HfSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HfSet {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.elements, &other.elements) {
            return Ordering::Equal;
        }
        self.rank
            .cmp(&other.rank)
            .then_with(|| self.elements.iter().cmp(other.elements.iter()))
    }
}

impl fmt::Display for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for HfSet {
    type Err = HfError;

    /// Parses brace notation like `{{},{{}}}`. Whitespace-insensitive;
    /// duplicate elements are rejected.
    fn from_str(s: &str) -> Result<Self, HfError> {
        let bytes: Vec<(usize, char)> = s
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        let mut pos = 0usize;
        let set = parse_set(&bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(HfError::Parse {
                pos: bytes[pos].0,
                msg: "trailing input after set".into(),
            });
        }
        Ok(set)
    }
}

fn parse_set(input: &[(usize, char)], pos: &mut usize) -> Result<HfSet, HfError> {
    let err = |pos: usize, msg: &str| HfError::Parse {
        pos: input
            .get(pos)
            .map_or(input.last().map_or(0, |&(i, _)| i + 1), |&(i, _)| i),
        msg: msg.into(),
    };
    match input.get(*pos) {
        Some(&(_, '{')) => *pos += 1,
        _ => return Err(err(*pos, "expected '{'")),
    }
    let mut elements = Vec::new();
    if let Some(&(_, '}')) = input.get(*pos) {
        *pos += 1;
        return Ok(HfSet::empty());
    }
    loop {
        let e = parse_set(input, pos)?;
        if elements.contains(&e) {
            return Err(err(*pos, "duplicate element"));
        }
        elements.push(e);
        match input.get(*pos) {
            Some(&(_, ',')) => *pos += 1,
            Some(&(_, '}')) => {
                *pos += 1;
                return Ok(HfSet::from_vec(elements));
            }
            _ => return Err(err(*pos, "expected ',' or '}'")),
        }
    }
}

/// Resource caps for universe construction.
#[derive(Debug, Clone)]
pub struct HfCaps {
    /// Maximum number of sets a single computation may create.
    pub max_nodes: usize,
    /// `v_level` refuses levels at or above this (|V_6| is astronomically large).
    pub max_level: u32,
}

impl Default for HfCaps {
    fn default() -> Self {
        HfCaps {
            max_nodes: 1_000_000,
            max_level: 6,
        }
    }
}

/// The cumulative level V_n: V_0 = ∅ and V_{k+1} = ℘(V_k).
pub fn v_level(n: u32, caps: &HfCaps) -> Result<HfSet, HfError> {
    if n >= caps.max_level {
        return Err(HfError::ResourceLimit(format!(
            "V_{n} refused: level cap is {}",
            caps.max_level
        )));
    }
    let mut cur = HfSet::empty();
    for _ in 0..n {
        cur = cur.powerset(caps.max_nodes)?;
    }
    Ok(cur)
}

/// Transitive closure of x (the least transitive superset of x's elements)
/// together with its cardinality, the finite rank measure ρ(x) = |trcl(x)|.
pub fn trcl_and_rho(x: &HfSet) -> (HfSet, usize) {
    let mut acc: BTreeSet<HfSet> = BTreeSet::new();
    let mut stack: Vec<HfSet> = x.elements().to_vec();
    while let Some(e) = stack.pop() {
        if acc.insert(e.clone()) {
            stack.extend(e.elements().iter().cloned());
        }
    }
    let rho = acc.len();
    (HfSet::from_vec(acc.into_iter().collect()), rho)
}

/// ρ(x) = |trcl(x)|.
pub fn rho(x: &HfSet) -> usize {
    trcl_and_rho(x).1
}

/// Mostowski collapse of a well-founded extensional relation on atoms 0..n.
///
/// `edges` holds pairs (a, b) meaning a E b. Returns π with
/// π(b) = {π(a) : a E b}; π is injective and its image is a transitive set.
pub fn mostowski_collapse(n: usize, edges: &[(usize, usize)]) -> Result<Vec<HfSet>, HfError> {
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        assert!(a < n && b < n, "edge atom out of range");
        preds[b].insert(a);
    }
    // extensionality: distinct atoms must have distinct predecessor sets
    for i in 0..n {
        for j in (i + 1)..n {
            if preds[i] == preds[j] {
                return Err(HfError::NotExtensional(i, j));
            }
        }
    }
    // well-foundedness via three-color depth-first search over E-predecessors
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; n];
    let mut image: Vec<Option<HfSet>> = vec![None; n];
    // iterative DFS; computes π bottom-up as nodes turn black
    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        let mut stack: Vec<(usize, bool)> = vec![(start, false)];
        while let Some((v, processed)) = stack.pop() {
            if processed {
                let members: Vec<HfSet> = preds[v]
                    .iter()
                    .map(|&p| image[p].clone().expect("predecessor collapsed first"))
                    .collect();
                image[v] = Some(HfSet::from_vec(members));
                color[v] = Color::Black;
                continue;
            }
            match color[v] {
                Color::Black => continue,
                Color::Gray => return Err(HfError::NotWellFounded(v)),
                Color::White => {}
            }
            color[v] = Color::Gray;
            stack.push((v, true));
            for &p in preds[v].iter().rev() {
                match color[p] {
                    Color::White => stack.push((p, false)),
                    Color::Gray => return Err(HfError::NotWellFounded(p)),
                    Color::Black => {}
                }
            }
        }
    }
    Ok(image.into_iter().map(|s| s.unwrap()).collect())
}

/// A finite transitive set of `HfSet` values, used as an ∈-model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitiveModel {
    carrier: Vec<HfSet>, // sorted canonical, duplicate-free
}

impl TransitiveModel {
    pub fn new(mut carrier: Vec<HfSet>) -> Result<Self, HfError> {
        carrier.sort();
        carrier.dedup();
        for x in &carrier {
            for e in x.elements() {
                if carrier.binary_search(e).is_err() {
                    return Err(HfError::NotTransitive(e.to_string()));
                }
            }
        }
        Ok(TransitiveModel { carrier })
    }

    /// Model whose carrier is the element set of a transitive set.
    pub fn from_transitive_set(x: &HfSet) -> Result<Self, HfError> {
        Self::new(x.elements().to_vec())
    }

    pub fn v_level_model(n: u32, caps: &HfCaps) -> Result<Self, HfError> {
        Ok(Self::from_transitive_set(&v_level(n, caps)?).expect("V_n is transitive"))
    }

    pub fn carrier(&self) -> &[HfSet] {
        &self.carrier
    }

    pub fn card(&self) -> usize {
        self.carrier.len()
    }

    pub fn contains(&self, x: &HfSet) -> bool {
        self.carrier.binary_search(x).is_ok()
    }

    pub fn index_of(&self, x: &HfSet) -> Option<usize> {
        self.carrier.binary_search(x).ok()
    }

    /// Smallest transitive superset of `seed` closed under ⋃ and containing ∅.
    ///
    /// This is the finite stand-in for a small H-style carrier around a code:
    /// transitive, so extensionality and foundation hold; contains the empty
    /// set and is union-closed, so those axioms hold as well.
    pub fn union_closed_closure(seed: &[HfSet]) -> Self {
        let mut acc: BTreeSet<HfSet> = BTreeSet::new();
        acc.insert(HfSet::empty());
        let mut stack: Vec<HfSet> = seed.to_vec();
        while let Some(x) = stack.pop() {
            if acc.contains(&x) {
                continue;
            }
            stack.extend(x.elements().iter().cloned());
            stack.push(x.union_all());
            acc.insert(x);
        }
        TransitiveModel {
            carrier: acc.into_iter().collect(),
        }
    }
}

/// All transitive models whose carrier is a subset of `universe`.
///
/// Enumerates 2^|universe| candidate subsets; callers keep |universe| ≤ 16.
pub fn transitive_submodels(universe: &[HfSet]) -> Vec<TransitiveModel> {
    let mut sorted = universe.to_vec();
    sorted.sort();
    sorted.dedup();
    let n = sorted.len();
    assert!(n <= 20, "transitive_submodels universe too large: {n}");
    // membership index for the transitivity test
    let idx: BTreeMap<&HfSet, usize> = sorted.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut member_masks: Vec<u32> = Vec::with_capacity(n);
    let mut closed = true;
    for x in &sorted {
        let mut m = 0u32;
        for e in x.elements() {
            match idx.get(e) {
                Some(&i) => m |= 1 << i,
                None => closed = false,
            }
        }
        member_masks.push(m);
    }
    assert!(closed, "universe must itself be transitive");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let transitive = (0..n).all(|i| mask & (1 << i) == 0 || member_masks[i] & !mask == 0);
        if transitive {
            let carrier: Vec<HfSet> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| sorted[i].clone())
                .collect();
            out.push(TransitiveModel { carrier });
        }
    }
    out
}

/// Formulas in the language of membership, with bounded and unbounded
/// quantifiers. Unbounded quantifiers relativize to a model's carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetFormula {
    In(String, String),
    Eq(String, String),
    Not(Box<SetFormula>),
    And(Box<SetFormula>, Box<SetFormula>),
    Or(Box<SetFormula>, Box<SetFormula>),
    Implies(Box<SetFormula>, Box<SetFormula>),
    Iff(Box<SetFormula>, Box<SetFormula>),
    /// ∀v φ, v ranging over the whole model.
    Forall(String, Box<SetFormula>),
    /// ∃v φ, v ranging over the whole model.
    Exists(String, Box<SetFormula>),
    /// ∀v ∈ bound. φ
    ForallIn(String, String, Box<SetFormula>),
    /// ∃v ∈ bound. φ
    ExistsIn(String, String, Box<SetFormula>),
}

impl SetFormula {
    /// Δ₀ means every quantifier is bounded.
    pub fn is_delta0(&self) -> bool {
        use SetFormula::*;
        match self {
            In(..) | Eq(..) => true,
            Not(a) => a.is_delta0(),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => a.is_delta0() && b.is_delta0(),
            Forall(..) | Exists(..) => false,
            ForallIn(_, _, a) | ExistsIn(_, _, a) => a.is_delta0(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &SetFormula, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
            use SetFormula::*;
            let touch = |v: &String, bound: &Vec<String>, acc: &mut BTreeSet<String>| {
                if !bound.contains(v) {
                    acc.insert(v.clone());
                }
            };
            match f {
                In(a, b) | Eq(a, b) => {
                    touch(a, bound, acc);
                    touch(b, bound, acc);
                }
                Not(a) => go(a, bound, acc),
                And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => {
                    go(a, bound, acc);
                    go(b, bound, acc);
                }
                Forall(v, a) | Exists(v, a) => {
                    bound.push(v.clone());
                    go(a, bound, acc);
                    bound.pop();
                }
                ForallIn(v, w, a) | ExistsIn(v, w, a) => {
                    touch(w, bound, acc);
                    bound.push(v.clone());
                    go(a, bound, acc);
                    bound.pop();
                }
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut Vec::new(), &mut acc);
        acc
    }
}

/// Combinators for assembling ∈-formulas.
pub mod build {
    use super::SetFormula;

    pub fn f_in(a: &str, b: &str) -> SetFormula {
        SetFormula::In(a.into(), b.into())
    }
    pub fn f_eq(a: &str, b: &str) -> SetFormula {
        SetFormula::Eq(a.into(), b.into())
    }
    pub fn f_not(a: SetFormula) -> SetFormula {
        SetFormula::Not(Box::new(a))
    }
    pub fn f_and(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::And(Box::new(a), Box::new(b))
    }
    pub fn f_and_all(mut fs: Vec<SetFormula>) -> SetFormula {
        let last = fs.pop().expect("nonempty conjunction");
        fs.into_iter().rev().fold(last, |acc, f| f_and(f, acc))
    }
    pub fn f_or(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::Or(Box::new(a), Box::new(b))
    }
    pub fn f_implies(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::Implies(Box::new(a), Box::new(b))
    }
    pub fn f_forall(v: &str, a: SetFormula) -> SetFormula {
        SetFormula::Forall(v.into(), Box::new(a))
    }
    pub fn f_exists(v: &str, a: SetFormula) -> SetFormula {
        SetFormula::Exists(v.into(), Box::new(a))
    }
    pub fn f_forall_in(v: &str, bound: &str, a: SetFormula) -> SetFormula {
        SetFormula::ForallIn(v.into(), bound.into(), Box::new(a))
    }
    pub fn f_exists_in(v: &str, bound: &str, a: SetFormula) -> SetFormula {
        SetFormula::ExistsIn(v.into(), bound.into(), Box::new(a))
    }
}

use build::*;

/// s = {u}: u ∈ s and every member of s equals u.
pub fn is_singleton_of(s: &str, u: &str) -> SetFormula {
    let w = format!("{s}_w");
    f_and(f_in(u, s), f_forall_in(&w, s, f_eq(&w, u)))
}

/// d = {u, v}.
pub fn is_doubleton_of(d: &str, u: &str, v: &str) -> SetFormula {
    let w = format!("{d}_w");
    f_and_all(vec![
        f_in(u, d),
        f_in(v, d),
        f_forall_in(&w, d, f_or(f_eq(&w, u), f_eq(&w, v))),
    ])
}

/// p = ⟨u, v⟩ as a Kuratowski pair.
pub fn is_pair_of(p: &str, u: &str, v: &str) -> SetFormula {
    let s = format!("{p}_s");
    let d = format!("{p}_d");
    let w = format!("{p}_m");
    f_exists_in(
        &s,
        p,
        f_exists_in(
            &d,
            p,
            f_and_all(vec![
                is_singleton_of(&s, u),
                is_doubleton_of(&d, u, v),
                f_forall_in(&w, p, f_or(f_eq(&w, &s), f_eq(&w, &d))),
            ]),
        ),
    )
}

/// z ⊆ x.
pub fn is_subset(z: &str, x: &str) -> SetFormula {
    let w = format!("{z}_sub");
    f_forall_in(&w, z, f_in(&w, x))
}

/// x is transitive: members of members are members.
pub fn is_transitive(x: &str) -> SetFormula {
    f_forall_in("tr_u", x, f_forall_in("tr_w", "tr_u", f_in("tr_w", x)))
}

/// x is an ordinal: transitive and linearly ordered by ∈.
pub fn is_ordinal(x: &str) -> SetFormula {
    let lin = f_forall_in(
        "od_u",
        x,
        f_forall_in(
            "od_v",
            x,
            f_or(
                f_in("od_u", "od_v"),
                f_or(f_in("od_v", "od_u"), f_eq("od_u", "od_v")),
            ),
        ),
    );
    f_and(is_transitive(x), lin)
}

/// f is a surjection from b onto x, with f a set of Kuratowski pairs.
/// All quantifiers are bounded, so this is Δ₀ in f, b, x.
pub fn is_surjection(f: &str, b: &str, x: &str) -> SetFormula {
    let into = f_forall_in(
        "sj_p",
        f,
        f_exists_in(
            "sj_u",
            b,
            f_exists_in("sj_v", x, is_pair_of("sj_p", "sj_u", "sj_v")),
        ),
    );
    let total = f_forall_in(
        "sj_u",
        b,
        f_exists_in(
            "sj_p",
            f,
            f_exists_in("sj_v", x, is_pair_of("sj_p", "sj_u", "sj_v")),
        ),
    );
    let functional = f_forall_in(
        "sj_p",
        f,
        f_forall_in(
            "sj_q",
            f,
            f_forall_in(
                "sj_u",
                b,
                f_forall_in(
                    "sj_v",
                    x,
                    f_forall_in(
                        "sj_v2",
                        x,
                        f_implies(
                            f_and(
                                is_pair_of("sj_p", "sj_u", "sj_v"),
                                is_pair_of("sj_q", "sj_u", "sj_v2"),
                            ),
                            f_eq("sj_v", "sj_v2"),
                        ),
                    ),
                ),
            ),
        ),
    );
    let onto = f_forall_in(
        "sj_v",
        x,
        f_exists_in(
            "sj_p",
            f,
            f_exists_in("sj_u", b, is_pair_of("sj_p", "sj_u", "sj_v")),
        ),
    );
    f_and_all(vec![into, total, functional, onto])
}

/// The fixed cardinality predicate, with free variable `x`:
///
/// Cd(x) := "x is an ordinal, and for no b ∈ x does any f map b onto x".
///
/// The quantifier over f is unbounded (relativized to the model), which is
/// exactly where small models can disagree with the real universe.
pub fn cd_formula() -> SetFormula {
    f_and(
        is_ordinal("x"),
        f_forall_in(
            "cd_b",
            "x",
            f_forall("cd_f", f_not(is_surjection("cd_f", "cd_b", "x"))),
        ),
    )
}

/// The fixed power-set predicate, with free variables `x`, `y`:
///
/// PwSt(x, y) := ∀z∈y (z ⊆ x)  ∧  ∀z (z ⊆ x → z ∈ y),
///
/// the second conjunct relativized to the model.
pub fn pwst_formula() -> SetFormula {
    f_and(
        f_forall_in("pw_z", "y", is_subset("pw_z", "x")),
        f_forall("pw_z", f_implies(is_subset("pw_z", "x"), f_in("pw_z", "y"))),
    )
}

/// Truth of φ in (M, ∈) under an assignment of model elements to free
/// variables. Unbounded quantifiers range over the carrier; bounded
/// quantifiers range over the actual elements of the bound value, which by
/// transitivity coincide with its M-elements.
pub fn eval_set_formula(
    phi: &SetFormula,
    model: &TransitiveModel,
    assignment: &BTreeMap<String, HfSet>,
) -> Result<bool, HfError> {
    for (v, x) in assignment {
        if !model.contains(x) {
            return Err(HfError::ValueOutsideModel(v.clone()));
        }
    }
    let mut env: Vec<(String, HfSet)> = assignment
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    eval_rec(phi, model, &mut env)
}

fn lookup<'e>(env: &'e [(String, HfSet)], v: &str) -> Result<&'e HfSet, HfError> {
    env.iter()
        .rev()
        .find(|(name, _)| name == v)
        .map(|(_, x)| x)
        .ok_or_else(|| HfError::FreeVarUnassigned(v.to_string()))
}

fn eval_rec(
    phi: &SetFormula,
    model: &TransitiveModel,
    env: &mut Vec<(String, HfSet)>,
) -> Result<bool, HfError> {
    use SetFormula::*;
    Ok(match phi {
        In(a, b) => {
            let (x, y) = (lookup(env, a)?, lookup(env, b)?);
            y.contains(x)
        }
        Eq(a, b) => lookup(env, a)? == lookup(env, b)?,
        Not(a) => !eval_rec(a, model, env)?,
        And(a, b) => eval_rec(a, model, env)? && eval_rec(b, model, env)?,
        Or(a, b) => eval_rec(a, model, env)? || eval_rec(b, model, env)?,
        Implies(a, b) => !eval_rec(a, model, env)? || eval_rec(b, model, env)?,
        Iff(a, b) => eval_rec(a, model, env)? == eval_rec(b, model, env)?,
        Forall(v, a) => {
            for x in model.carrier() {
                env.push((v.clone(), x.clone()));
                let ok = eval_rec(a, model, env)?;
                env.pop();
                if !ok {
                    return Ok(false);
                }
            }
            true
        }
        Exists(v, a) => {
            for x in model.carrier() {
                env.push((v.clone(), x.clone()));
                let ok = eval_rec(a, model, env)?;
                env.pop();
                if ok {
                    return Ok(true);
                }
            }
            false
        }
        ForallIn(v, w, a) => {
            let bound = lookup(env, w)?.clone();
            for x in bound.elements() {
                env.push((v.clone(), x.clone()));
                let ok = eval_rec(a, model, env)?;
                env.pop();
                if !ok {
                    return Ok(false);
                }
            }
            true
        }
        ExistsIn(v, w, a) => {
            let bound = lookup(env, w)?.clone();
            for x in bound.elements() {
                env.push((v.clone(), x.clone()));
                let ok = eval_rec(a, model, env)?;
                env.pop();
                if ok {
                    return Ok(true);
                }
            }
            false
        }
    })
}

/// The two predicates whose correctness the workbench tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RPredicate {
    Cd,
    PwSt,
}

impl RPredicate {
    pub fn name(self) -> &'static str {
        match self {
            RPredicate::Cd => "Cd",
            RPredicate::PwSt => "PwSt",
        }
    }
}

/// Real truth of Cd(x): in the finite universe every finite ordinal is a
/// cardinal, so this is just "x is a von Neumann natural".
pub fn real_cd(x: &HfSet) -> bool {
    x.is_finite_ordinal()
}

/// Real truth of PwSt(x, y): y is the true power set of x.
pub fn real_pwst(x: &HfSet, y: &HfSet, caps: &HfCaps) -> Result<bool, HfError> {
    Ok(*y == x.powerset(caps.max_nodes)?)
}

/// True iff M computes R exactly as the real universe does, over all tuples
/// from M.
pub fn is_r_correct(
    model: &TransitiveModel,
    r: RPredicate,
    caps: &HfCaps,
) -> Result<bool, HfError> {
    match r {
        RPredicate::Cd => {
            let phi = cd_formula();
            for x in model.carrier() {
                let mut asg = BTreeMap::new();
                asg.insert("x".to_string(), x.clone());
                if eval_set_formula(&phi, model, &asg)? != real_cd(x) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        RPredicate::PwSt => {
            let phi = pwst_formula();
            for x in model.carrier() {
                for y in model.carrier() {
                    let mut asg = BTreeMap::new();
                    asg.insert("x".to_string(), x.clone());
                    asg.insert("y".to_string(), y.clone());
                    if eval_set_formula(&phi, model, &asg)? != real_pwst(x, y, caps)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// Deterministic generator of random Δ₀ and Σ₁ formulas for absoluteness
/// sweeps. Generated formulas use variables `p0..p{n}` as parameters.
pub mod random_formulas {
    use super::SetFormula;
    use rand::Rng;

    /// A random Δ₀ formula of connective/quantifier depth ≤ `depth` whose free
    /// variables are drawn from `vars`.
    pub fn random_delta0<R: Rng>(rng: &mut R, depth: u32, vars: &[String]) -> SetFormula {
        let mut fresh = 0usize;
        go(rng, depth, &mut vars.to_vec(), &mut fresh)
    }

    /// ∃y ψ with ψ Δ₀ (Σ₁ shape).
    pub fn random_sigma1<R: Rng>(rng: &mut R, depth: u32, vars: &[String]) -> SetFormula {
        let mut scope = vars.to_vec();
        let witness = "w_sig".to_string();
        scope.push(witness.clone());
        let mut fresh = 0usize;
        let body = go(rng, depth, &mut scope, &mut fresh);
        SetFormula::Exists(witness, Box::new(body))
    }

    fn atom<R: Rng>(rng: &mut R, scope: &[String]) -> SetFormula {
        let a = scope[rng.gen_range(0..scope.len())].clone();
        let b = scope[rng.gen_range(0..scope.len())].clone();
        if rng.gen_bool(0.6) {
            SetFormula::In(a, b)
        } else {
            SetFormula::Eq(a, b)
        }
    }

    fn go<R: Rng>(
        rng: &mut R,
        depth: u32,
        scope: &mut Vec<String>,
        fresh: &mut usize,
    ) -> SetFormula {
        if depth == 0 || rng.gen_bool(0.25) {
            return atom(rng, scope);
        }
        match rng.gen_range(0..6) {
            0 => SetFormula::Not(Box::new(go(rng, depth - 1, scope, fresh))),
            1 => SetFormula::And(
                Box::new(go(rng, depth - 1, scope, fresh)),
                Box::new(go(rng, depth - 1, scope, fresh)),
            ),
            2 => SetFormula::Or(
                Box::new(go(rng, depth - 1, scope, fresh)),
                Box::new(go(rng, depth - 1, scope, fresh)),
            ),
            3 => SetFormula::Implies(
                Box::new(go(rng, depth - 1, scope, fresh)),
                Box::new(go(rng, depth - 1, scope, fresh)),
            ),
            _ => {
                let bound = scope[rng.gen_range(0..scope.len())].clone();
                let v = format!("q{}", *fresh);
                *fresh += 1;
                scope.push(v.clone());
                let body = go(rng, depth - 1, scope, fresh);
                scope.pop();
                if rng.gen_bool(0.5) {
                    SetFormula::ForallIn(v, bound, Box::new(body))
                } else {
                    SetFormula::ExistsIn(v, bound, Box::new(body))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn caps() -> HfCaps {
        HfCaps::default()
    }

    fn vn(n: usize) -> HfSet {
        HfSet::von_neumann(n)
    }

    #[test]
    fn v_levels() {
        assert_eq!(v_level(0, &caps()).unwrap(), HfSet::empty());
        let v2 = v_level(2, &caps()).unwrap();
        assert_eq!(
            v2,
            HfSet::from_vec(vec![HfSet::empty(), HfSet::singleton(HfSet::empty())])
        );
        let v5 = v_level(5, &caps()).unwrap();
        assert_eq!(v5.card(), 65536);
        assert!(matches!(
            v_level(6, &caps()),
            Err(HfError::ResourceLimit(_))
        ));
    }

    #[test]
    fn v_level_membership_and_rank() {
        // every x ∈ V_n satisfies x ⊆ V_{n-1} and rank(x) < n
        for n in 1..=4u32 {
            let vn_set = v_level(n, &caps()).unwrap();
            let prev = v_level(n - 1, &caps()).unwrap();
            for x in vn_set.elements() {
                assert!(x.is_subset_of(&prev), "{x} ⊄ V_{}", n - 1);
                assert!(x.rank() < n);
            }
        }
    }

    #[test]
    fn trcl_examples() {
        let empty = HfSet::empty();
        assert_eq!(trcl_and_rho(&empty), (HfSet::empty(), 0));
        let s1 = HfSet::singleton(empty.clone());
        assert_eq!(trcl_and_rho(&s1), (HfSet::singleton(empty.clone()), 1));
        let s2 = HfSet::singleton(s1.clone());
        let (t, r) = trcl_and_rho(&s2);
        assert_eq!(t, HfSet::from_vec(vec![empty, s1]));
        assert_eq!(r, 2);
    }

    #[test]
    fn collapse_examples() {
        // ({a,b}, {(a,b)}) -> π(a)=∅, π(b)={∅}
        let pi = mostowski_collapse(2, &[(0, 1)]).unwrap();
        assert_eq!(pi[0], HfSet::empty());
        assert_eq!(pi[1], HfSet::singleton(HfSet::empty()));
        // ({a}, ∅) -> π(a)=∅
        let pi = mostowski_collapse(1, &[]).unwrap();
        assert_eq!(pi[0], HfSet::empty());
        // two atoms with equal (empty) predecessor sets
        assert_eq!(
            mostowski_collapse(3, &[(0, 2), (1, 2)]),
            Err(HfError::NotExtensional(0, 1))
        );
        // a 2-cycle is not well-founded
        assert!(matches!(
            mostowski_collapse(2, &[(0, 1), (1, 0)]),
            Err(HfError::NotWellFounded(_))
        ));
    }

    #[test]
    fn collapse_is_injective_with_transitive_image() {
        for n in 0..=3usize {
            for mask in 0u32..(1 << (n * n)) {
                let edges: Vec<(usize, usize)> = (0..n * n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| (i / n, i % n))
                    .collect();
                if let Ok(images) = mostowski_collapse(n, &edges) {
                    for i in 0..n {
                        for j in (i + 1)..n {
                            assert_ne!(images[i], images[j], "π must be injective");
                        }
                    }
                    assert!(
                        TransitiveModel::new(images).is_ok(),
                        "the image set must be transitive"
                    );
                }
            }
        }
    }

    #[test]
    fn assigned_values_must_lie_in_the_model() {
        let m = TransitiveModel::v_level_model(2, &caps()).unwrap();
        let phi = SetFormula::In("x".into(), "x".into());
        let mut asg = BTreeMap::new();
        asg.insert("x".to_string(), vn(4)); // not in V_2
        assert_eq!(
            eval_set_formula(&phi, &m, &asg),
            Err(HfError::ValueOutsideModel("x".into()))
        );
    }

    #[test]
    fn collapse_of_transitive_set_is_identity() {
        // encode each transitive M ⊆ V_4 as an atom graph and collapse it back
        let v4 = v_level(4, &caps()).unwrap();
        let models = transitive_submodels(v4.elements());
        assert!(models.len() > 100);
        for m in &models {
            let atoms = m.carrier();
            let mut edges = Vec::new();
            for (i, x) in atoms.iter().enumerate() {
                for (j, y) in atoms.iter().enumerate() {
                    if y.contains(x) {
                        edges.push((i, j));
                    }
                }
            }
            let pi = mostowski_collapse(atoms.len(), &edges).unwrap();
            for (i, x) in atoms.iter().enumerate() {
                assert_eq!(&pi[i], x);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let caps = caps();
        // Cd at the ordinal 2 inside V_3
        let m = TransitiveModel::v_level_model(3, &caps).unwrap();
        let mut asg = BTreeMap::new();
        asg.insert("x".to_string(), vn(2));
        assert!(eval_set_formula(&cd_formula(), &m, &asg).unwrap());

        // PwSt(2, {0,1,2}) believed inside the carrier {0,1,2,{0,1,2}}
        let three = vn(3);
        let m = TransitiveModel::new(vec![vn(0), vn(1), vn(2), three.clone()]).unwrap();
        let mut asg = BTreeMap::new();
        asg.insert("x".to_string(), vn(2));
        asg.insert("y".to_string(), three.clone());
        assert!(eval_set_formula(&pwst_formula(), &m, &asg).unwrap());
        // but y is not the real power set of 2
        assert!(!real_pwst(&vn(2), &three, &caps).unwrap());

        // ∃z (z ∈ x) with x = ∅ in V_2
        let m = TransitiveModel::v_level_model(2, &caps).unwrap();
        let phi = SetFormula::Exists("z".into(), Box::new(SetFormula::In("z".into(), "x".into())));
        let mut asg = BTreeMap::new();
        asg.insert("x".to_string(), HfSet::empty());
        assert!(!eval_set_formula(&phi, &m, &asg).unwrap());

        // unassigned free variable
        let err = eval_set_formula(&phi, &m, &BTreeMap::new());
        assert_eq!(err, Err(HfError::FreeVarUnassigned("x".into())));
    }

    #[test]
    fn r_correctness() {
        let caps = caps();
        // the four-element carrier that believes {0,1,2} = ℘(2)
        let bad = TransitiveModel::new(vec![vn(0), vn(1), vn(2), vn(3)]).unwrap();
        assert!(!is_r_correct(&bad, RPredicate::PwSt, &caps).unwrap());
        // V_2 is PwSt-correct
        let v2 = TransitiveModel::v_level_model(2, &caps).unwrap();
        assert!(is_r_correct(&v2, RPredicate::PwSt, &caps).unwrap());
    }

    #[test]
    fn every_transitive_submodel_of_v4_is_cd_correct() {
        let caps = caps();
        let v4 = v_level(4, &caps).unwrap();
        for m in transitive_submodels(v4.elements()) {
            assert!(
                is_r_correct(&m, RPredicate::Cd, &caps).unwrap(),
                "carrier {:?}",
                m.carrier()
            );
        }
    }

    #[test]
    fn delta0_absoluteness_between_transitive_models() {
        // Δ₀ formulas agree between transitive M ⊆ N; Σ₁ never flips true→false upward
        let caps = caps();
        let mut rng = ChaCha8Rng::seed_from_u64(0xABCD);
        let v4 = v_level(4, &caps).unwrap();
        let all = transitive_submodels(v4.elements());
        let n_model = TransitiveModel::from_transitive_set(&v4).unwrap();
        let mut checked = 0;
        for m in all.iter().filter(|m| m.card() > 0).take(60) {
            for _ in 0..20 {
                let vars: Vec<String> = (0..2).map(|i| format!("p{i}")).collect();
                let phi = random_formulas::random_delta0(&mut rng, 4, &vars);
                let sig = random_formulas::random_sigma1(&mut rng, 3, &vars);
                let mut asg = BTreeMap::new();
                for v in &vars {
                    let idx = rng.gen_range(0..m.card());
                    asg.insert(v.clone(), m.carrier()[idx].clone());
                }
                let in_m = eval_set_formula(&phi, m, &asg).unwrap();
                let in_n = eval_set_formula(&phi, &n_model, &asg).unwrap();
                assert_eq!(in_m, in_n, "Δ₀ absoluteness failed for {phi:?}");
                let s_m = eval_set_formula(&sig, m, &asg).unwrap();
                let s_n = eval_set_formula(&sig, &n_model, &asg).unwrap();
                assert!(!s_m || s_n, "Σ₁ flipped true→false going up: {sig:?}");
                checked += 1;
            }
        }
        assert!(checked >= 1000);
    }

    #[test]
    fn set_text_round_trip() {
        let texts = ["{}", "{{}}", "{{},{{}}}", "{ { } , { { } } }"];
        for t in texts {
            let s: HfSet = t.parse().unwrap();
            let printed = s.to_string();
            let again: HfSet = printed.parse().unwrap();
            assert_eq!(s, again);
        }
        assert!("{{},{}}".parse::<HfSet>().is_err(), "duplicates rejected");
        assert!("{".parse::<HfSet>().is_err());
        assert!("{}x".parse::<HfSet>().is_err());
    }

    #[test]
    fn kuratowski_round_trip() {
        let a = vn(2);
        let b = vn(1);
        let p = HfSet::kuratowski(a.clone(), b.clone());
        assert_eq!(p.decode_kuratowski(), Some((a.clone(), b)));
        let pp = HfSet::kuratowski(a.clone(), a.clone());
        assert_eq!(pp.decode_kuratowski(), Some((a.clone(), a)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn hfset_strategy() -> impl Strategy<Value = HfSet> {
            let leaf = Just(HfSet::empty());
            leaf.prop_recursive(3, 12, 3, |inner| {
                proptest::collection::vec(inner, 0..3).prop_map(HfSet::from_vec)
            })
        }

        proptest! {
            #[test]
            fn text_round_trip(x in hfset_strategy()) {
                let printed = x.to_string();
                let parsed: HfSet = printed.parse().unwrap();
                prop_assert_eq!(parsed, x);
            }

            #[test]
            fn closure_is_transitive_and_counts_rho(x in hfset_strategy()) {
                let (t, rho) = trcl_and_rho(&x);
                prop_assert_eq!(t.card(), rho);
                prop_assert!(t.is_transitive_set());
                for e in x.elements() {
                    prop_assert!(t.contains(e));
                }
            }

            #[test]
            fn union_and_pair_laws(x in hfset_strategy(), y in hfset_strategy()) {
                let u = x.union(&y);
                for e in x.elements().iter().chain(y.elements()) {
                    prop_assert!(u.contains(e));
                }
                prop_assert!(u.card() <= x.card() + y.card());
                let p = HfSet::kuratowski(x.clone(), y.clone());
                prop_assert_eq!(p.decode_kuratowski(), Some((x, y)));
            }
        }
    }

    #[test]
    fn union_closed_closure_is_transitive_and_closed() {
        let code = HfSet::kuratowski(vn(3), HfSet::singleton(HfSet::kuratowski(vn(0), vn(1))));
        let m = TransitiveModel::union_closed_closure(std::slice::from_ref(&code));
        assert!(m.contains(&code));
        assert!(m.contains(&HfSet::empty()));
        for x in m.carrier() {
            for e in x.elements() {
                assert!(m.contains(e));
            }
            assert!(m.contains(&x.union_all()));
        }
    }
}
