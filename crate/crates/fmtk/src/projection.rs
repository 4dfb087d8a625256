//! Projective classes with size-bounded witnesses: membership via exhaustive
//! expansion search, paired Σ/Π presentations, and verification that a
//! cardinal function is definably bounding.
//!
//! A [`ProjectionSpec`] describes `{A : ∃B (B ⊨ φ and B↾τ = A)}` together
//! with a bound on the total size of witness expansions as a function of |A|.
//! The witness search fixes the reduct exactly (atom-identical) and
//! enumerates interpretations of the new symbols, new-sort sizes ascending,
//! so the first hit is the canonical-least witness.

use crate::formula::{analyze, Formula};
use crate::logic::{
    default_names, size_assignments, LogicError, SlotOdometer, Structure, Vocabulary,
};
use crate::semantics::{eval, Assignment, SemanticsError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("no size bound: the spec is unbounded and no hard cap was supplied")]
    BoundMissing,
    #[error("not a Δ-presentation on this input: {0}")]
    InconsistentDelta(String),
    #[error("structure is not over the spec's base vocabulary")]
    BaseMismatch,
    #[error("invalid projection spec: {0}")]
    InvalidSpec(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// A named cardinal function on naturals. Arithmetic saturates at u64::MAX,
/// which stands in for "astronomically large" at desk scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundingFunction {
    Id,
    /// κ ↦ 2^κ
    Exp2,
    /// κ ↦ 2^(2^κ)
    DoubleExp2,
    /// f ∘ g
    Compose(Box<BoundingFunction>, Box<BoundingFunction>),
    /// n-fold iteration of f
    Iterate(Box<BoundingFunction>, u32),
}

impl BoundingFunction {
    pub fn eval(&self, x: u64) -> u64 {
        match self {
            BoundingFunction::Id => x,
            BoundingFunction::Exp2 => {
                if x >= 63 {
                    u64::MAX
                } else {
                    1u64 << x
                }
            }
            BoundingFunction::DoubleExp2 => {
                BoundingFunction::Exp2.eval(BoundingFunction::Exp2.eval(x))
            }
            BoundingFunction::Compose(f, g) => f.eval(g.eval(x)),
            BoundingFunction::Iterate(f, n) => {
                let mut v = x;
                for _ in 0..*n {
                    v = f.eval(v);
                }
                v
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            BoundingFunction::Id => "id".to_string(),
            BoundingFunction::Exp2 => "exp2".to_string(),
            BoundingFunction::DoubleExp2 => "exp2exp2".to_string(),
            BoundingFunction::Compose(f, g) => format!("{}∘{}", f.name(), g.name()),
            BoundingFunction::Iterate(f, n) => format!("{}^{n}", f.name()),
        }
    }

    /// Non-decreasing on the probe range 0..=32.
    pub fn is_monotone_on_probe(&self) -> bool {
        (0..32u64).all(|x| self.eval(x) <= self.eval(x + 1))
    }
}

/// Size bound for witness expansions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Func(BoundingFunction),
    /// Explicit table of (input, bound) pairs; inputs not listed are refused.
    Table(Vec<(u64, u64)>),
    /// No bound: every search must supply a hard cap.
    Unbounded,
}

impl Bound {
    fn lookup(&self, x: u64, hard_cap: Option<u64>) -> Result<u64, ProjectionError> {
        match self {
            Bound::Func(f) => Ok(f.eval(x)),
            Bound::Table(t) => t
                .iter()
                .find(|(k, _)| *k == x)
                .map(|(_, v)| *v)
                .ok_or(ProjectionError::BoundMissing),
            Bound::Unbounded => hard_cap.ok_or(ProjectionError::BoundMissing),
        }
    }
}

/// (base vocabulary τ, extended vocabulary τ′, sentence φ over τ′, witness
/// size bound): a Σ-presentation of a class of τ-structures.
#[derive(Debug, Clone)]
pub struct ProjectionSpec {
    pub base: Arc<Vocabulary>,
    pub extended: Arc<Vocabulary>,
    pub sentence: Formula,
    pub bound: Bound,
}

impl ProjectionSpec {
    pub fn new(
        base: Arc<Vocabulary>,
        extended: Arc<Vocabulary>,
        sentence: Formula,
        bound: Bound,
    ) -> Result<Self, ProjectionError> {
        base.check_subvocabulary(&extended)
            .map_err(|e| ProjectionError::InvalidSpec(e.to_string()))?;
        let a = analyze(&sentence, &extended);
        if !a.free_first_order.is_empty() || !a.free_second_order.is_empty() {
            return Err(ProjectionError::InvalidSpec(format!(
                "the spec sentence has free variables: {:?}",
                a.free_first_order
            )));
        }
        if let Bound::Func(f) = &bound {
            if !f.is_monotone_on_probe() {
                return Err(ProjectionError::InvalidSpec(format!(
                    "bound {} is not non-decreasing",
                    f.name()
                )));
            }
        }
        Ok(ProjectionSpec {
            base,
            extended,
            sentence,
            bound,
        })
    }

    /// Short bound description, for diagnostics.
    pub fn bound_name(&self) -> String {
        match &self.bound {
            Bound::Func(f) => f.name(),
            Bound::Table(_) => "table".to_string(),
            Bound::Unbounded => "unbounded".to_string(),
        }
    }

    /// Sorts of the extended vocabulary that are not in the base.
    pub fn new_sorts(&self) -> Vec<usize> {
        self.extended
            .sorts
            .iter()
            .enumerate()
            .filter(|(_, s)| self.base.sort_id(s).is_none())
            .map(|(i, _)| i)
            .collect()
    }

    fn new_symbol_ids(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let rels = self
            .extended
            .relations
            .iter()
            .enumerate()
            .filter(|(_, r)| self.base.relation_id(&r.name).is_none())
            .map(|(i, _)| i)
            .collect();
        let funcs = self
            .extended
            .functions
            .iter()
            .enumerate()
            .filter(|(_, f)| self.base.function_id(&f.name).is_none())
            .map(|(i, _)| i)
            .collect();
        let consts = self
            .extended
            .constants
            .iter()
            .enumerate()
            .filter(|(_, c)| self.base.constant_id(&c.name).is_none())
            .map(|(i, _)| i)
            .collect();
        (rels, funcs, consts)
    }
}

/// Search limits for expansion searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchOpts {
    /// Hard cap on witness total size for unbounded specs.
    pub hard_cap: Option<u64>,
    /// Maximum number of candidate expansions inspected per search.
    pub candidate_cap: u64,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            hard_cap: None,
            candidate_cap: 100_000_000,
        }
    }
}

/// Size tuples for the new sorts, total bounded by `extra`, ascending.
fn new_sort_size_tuples(n_new: usize, extra: usize) -> Vec<Vec<usize>> {
    size_assignments(&vec![(0, extra); n_new])
        .into_iter()
        .filter(|sizes| sizes.iter().sum::<usize>() <= extra)
        .collect()
}

/// Builds the extended structure with the given new-sort sizes, the base
/// interpretations of `a`, and least interpretations for new symbols.
/// Returns None when no valid structure exists (a new constant over an empty
/// sort, for example).
fn seed_expansion(
    a: &Structure,
    spec: &ProjectionSpec,
    new_sorts: &[usize],
    sizes: &[usize],
) -> Option<Structure> {
    let new_domains: Vec<(String, Vec<String>)> = new_sorts
        .iter()
        .zip(sizes)
        .map(|(&s, &n)| {
            let name = spec.extended.sorts[s].clone();
            let names = default_names(&name, n);
            (name, names)
        })
        .collect();
    a.expand(&spec.extended, &new_domains).ok()
}

/// Membership in the Σ-projection: searches for a witness B ⊨ φ with
/// B↾τ = A (atom-identical) and |B| within the spec's bound, returning the
/// canonical-least witness.
pub fn in_sigma_projection(
    a: &Structure,
    spec: &ProjectionSpec,
    opts: &SearchOpts,
) -> Result<Option<Structure>, ProjectionError> {
    if a.vocabulary().as_ref() != spec.base.as_ref() {
        return Err(ProjectionError::BaseMismatch);
    }
    let total = a.total_size() as u64;
    let budget = spec.bound.lookup(total, opts.hard_cap)?;
    if budget < total {
        return Ok(None);
    }
    let extra = (budget - total).min(64) as usize;
    let new_sorts = spec.new_sorts();
    let (new_rels, new_funcs, new_consts) = spec.new_symbol_ids();
    let alpha = Assignment::new();
    let mut inspected = 0u64;
    for sizes in new_sort_size_tuples(new_sorts.len(), extra) {
        let Some(mut b) = seed_expansion(a, spec, &new_sorts, &sizes) else {
            continue;
        };
        let odometer = SlotOdometer::for_symbols(&b, &new_rels, &new_funcs, &new_consts);
        loop {
            inspected += 1;
            if inspected > opts.candidate_cap {
                return Err(ProjectionError::ResourceCap(format!(
                    "expansion search inspected more than {} candidates",
                    opts.candidate_cap
                )));
            }
            if eval(&spec.sentence, &b, &alpha)? {
                debug_assert_eq!(&b.reduct(&spec.base)?, a);
                return Ok(Some(b));
            }
            if !odometer.advance(&mut b) {
                break;
            }
        }
    }
    Ok(None)
}

/// Decision-only variant of the witness search. Exploits interchangeability:
/// when a sort is untouched by base symbols and every undetermined symbol has
/// exactly one argument slot of that sort (and does not produce values in
/// it), interpretations are enumerated as multisets of per-atom profiles
/// rather than raw assignments. Sound for existence because permuting such a
/// sort's atoms maps witnesses to witnesses with the same reduct.
pub fn expansion_exists(
    a: &Structure,
    spec: &ProjectionSpec,
    opts: &SearchOpts,
) -> Result<bool, ProjectionError> {
    if a.vocabulary().as_ref() != spec.base.as_ref() {
        return Err(ProjectionError::BaseMismatch);
    }
    let total = a.total_size() as u64;
    let budget = spec.bound.lookup(total, opts.hard_cap)?;
    if budget < total {
        return Ok(false);
    }
    let extra = (budget - total).min(64) as usize;
    let new_sorts = spec.new_sorts();
    let (new_rels, new_funcs, new_consts) = spec.new_symbol_ids();
    let alpha = Assignment::new();
    let mut inspected = 0u64;
    for sizes in new_sort_size_tuples(new_sorts.len(), extra) {
        let Some(mut b) = seed_expansion(a, spec, &new_sorts, &sizes) else {
            continue;
        };
        match profile_plan(&b, spec, &new_rels, &new_funcs, &new_consts) {
            Some(plan) if plan.profile_space > 1 => {
                if search_profiles(&mut b, spec, &plan, &alpha, opts, &mut inspected)? {
                    return Ok(true);
                }
            }
            _ => {
                let odometer = SlotOdometer::for_symbols(&b, &new_rels, &new_funcs, &new_consts);
                loop {
                    inspected += 1;
                    if inspected > opts.candidate_cap {
                        return Err(ProjectionError::ResourceCap(format!(
                            "expansion search inspected more than {} candidates",
                            opts.candidate_cap
                        )));
                    }
                    if eval(&spec.sentence, &b, &alpha)? {
                        return Ok(true);
                    }
                    if !odometer.advance(&mut b) {
                        break;
                    }
                }
            }
        }
    }
    Ok(false)
}

/// How to factor the undetermined interpretations per atom of one
/// interchangeable sort.
struct ProfilePlan {
    /// The factored sort.
    sort: usize,
    /// (relation id, position of the sort slot) with exactly one such slot.
    rels: Vec<(usize, usize)>,
    /// (function id, position of the sort slot); result sort differs.
    funcs: Vec<(usize, usize)>,
    /// Symbols without any slot of the factored sort, enumerated separately.
    outer: SlotOdometer,
    /// Number of distinct per-atom profiles.
    profile_space: u64,
}

fn profile_plan(
    b: &Structure,
    spec: &ProjectionSpec,
    new_rels: &[usize],
    new_funcs: &[usize],
    new_consts: &[usize],
) -> Option<ProfilePlan> {
    let vocab = b.vocabulary();
    let base_mentions_sort = |s: usize| {
        let name = &vocab.sorts[s];
        let in_base = spec.base.sort_id(name);
        match in_base {
            None => false,
            Some(bs) => {
                spec.base.relations.iter().any(|r| r.args.contains(&bs))
                    || spec
                        .base
                        .functions
                        .iter()
                        .any(|f| f.args.contains(&bs) || f.result == bs)
                    || spec.base.constants.iter().any(|c| c.sort == bs)
            }
        }
    };
    let mut best: Option<ProfilePlan> = None;
    'sorts: for s in 0..vocab.sorts.len() {
        if base_mentions_sort(s) || b.sort_size(s) == 0 {
            continue;
        }
        // constants of sort s break interchangeability
        if new_consts.iter().any(|&id| vocab.constants[id].sort == s) {
            continue;
        }
        let mut rels = Vec::new();
        let mut outer_rels = Vec::new();
        for &id in new_rels {
            let slots: Vec<usize> = vocab.relations[id]
                .args
                .iter()
                .enumerate()
                .filter(|(_, &arg)| arg == s)
                .map(|(i, _)| i)
                .collect();
            match slots.len() {
                0 => outer_rels.push(id),
                1 => rels.push((id, slots[0])),
                _ => continue 'sorts,
            }
        }
        let mut funcs = Vec::new();
        let mut outer_funcs = Vec::new();
        for &id in new_funcs {
            let decl = &vocab.functions[id];
            if decl.result == s {
                continue 'sorts;
            }
            let slots: Vec<usize> = decl
                .args
                .iter()
                .enumerate()
                .filter(|(_, &arg)| arg == s)
                .map(|(i, _)| i)
                .collect();
            match slots.len() {
                0 => outer_funcs.push(id),
                1 => funcs.push((id, slots[0])),
                _ => continue 'sorts,
            }
        }
        if rels.is_empty() && funcs.is_empty() {
            continue;
        }
        // profile space: choices for one atom of s across all factored symbols
        let mut space: u64 = 1;
        for &(id, slot) in &rels {
            let decl = &vocab.relations[id];
            let sub: u64 = decl
                .args
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != slot)
                .map(|(_, &arg)| b.sort_size(arg) as u64)
                .product();
            if sub >= 40 {
                continue 'sorts;
            }
            space = space.saturating_mul(1u64 << sub);
        }
        for &(id, slot) in &funcs {
            let decl = &vocab.functions[id];
            let sub: u64 = decl
                .args
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != slot)
                .map(|(_, &arg)| b.sort_size(arg) as u64)
                .product();
            let choices = (b.sort_size(decl.result) as u64).saturating_pow(sub as u32);
            space = space.saturating_mul(choices);
        }
        let outer = SlotOdometer::for_symbols(b, &outer_rels, &outer_funcs, new_consts);
        let plan = ProfilePlan {
            sort: s,
            rels,
            funcs,
            outer,
            profile_space: space,
        };
        let better = match &best {
            None => true,
            Some(prev) => {
                multiset_count(plan.profile_space, b.sort_size(s))
                    < multiset_count(prev.profile_space, b.sort_size(prev.sort))
            }
        };
        if better {
            best = Some(plan);
        }
    }
    best
}

fn multiset_count(space: u64, n: usize) -> u128 {
    // C(space + n - 1, n), saturating
    let mut num: u128 = 1;
    for k in 0..n as u128 {
        num = num.saturating_mul((space as u128).saturating_add(k));
    }
    let mut den: u128 = 1;
    for k in 1..=n as u128 {
        den = den.saturating_mul(k);
    }
    num / den
}

/// Writes profile `p` for atom `x` of the factored sort into the structure.
fn apply_profile(b: &mut Structure, plan: &ProfilePlan, x: usize, mut p: u64) {
    let vocab = b.vocabulary().clone();
    for &(id, slot) in &plan.rels {
        let decl = &vocab.relations[id];
        let sub_sizes: Vec<usize> = decl
            .args
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != slot)
            .map(|(_, &arg)| b.sort_size(arg))
            .collect();
        let sub_space: usize = sub_sizes.iter().product();
        let mask = if sub_space >= 64 {
            u64::MAX
        } else {
            (1u64 << sub_space) - 1
        };
        let bits = p & mask;
        p >>= sub_space;
        for (k, sub) in crate::logic::tuple_space(&sub_sizes).iter().enumerate() {
            let mut tuple = Vec::with_capacity(decl.args.len());
            let mut it = sub.iter();
            for i in 0..decl.args.len() {
                if i == slot {
                    tuple.push(x);
                } else {
                    tuple.push(*it.next().unwrap());
                }
            }
            b.rel_mut(id).set(&tuple, bits & (1 << k) != 0);
        }
    }
    for &(id, slot) in &plan.funcs {
        let decl = &vocab.functions[id];
        let sub_sizes: Vec<usize> = decl
            .args
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != slot)
            .map(|(_, &arg)| b.sort_size(arg))
            .collect();
        let radix = b.sort_size(decl.result) as u64;
        for sub in crate::logic::tuple_space(&sub_sizes) {
            let value = (p % radix) as usize;
            p /= radix;
            let mut tuple = Vec::with_capacity(decl.args.len());
            let mut it = sub.iter();
            for i in 0..decl.args.len() {
                if i == slot {
                    tuple.push(x);
                } else {
                    tuple.push(*it.next().unwrap());
                }
            }
            b.func_mut(id).set(&tuple, value);
        }
    }
}

fn search_profiles(
    b: &mut Structure,
    spec: &ProjectionSpec,
    plan: &ProfilePlan,
    alpha: &Assignment,
    opts: &SearchOpts,
    inspected: &mut u64,
) -> Result<bool, ProjectionError> {
    let n = b.sort_size(plan.sort);
    plan.outer.reset(b);
    loop {
        // non-decreasing profile sequences = multisets over the profile space
        let mut profiles = vec![0u64; n];
        loop {
            for (x, &p) in profiles.iter().enumerate() {
                apply_profile(b, plan, x, p);
            }
            *inspected += 1;
            if *inspected > opts.candidate_cap {
                return Err(ProjectionError::ResourceCap(format!(
                    "expansion search inspected more than {} candidates",
                    opts.candidate_cap
                )));
            }
            if eval(&spec.sentence, b, alpha)? {
                return Ok(true);
            }
            // advance the non-decreasing sequence
            let mut advanced = false;
            let mut k = n;
            while k > 0 {
                k -= 1;
                if profiles[k] + 1 < plan.profile_space {
                    profiles[k] += 1;
                    let v = profiles[k];
                    profiles[k + 1..].fill(v);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        if !plan.outer.advance(b) {
            return Ok(false);
        }
    }
}

/// Membership in a Δ-presented class: true iff the Σ-side search finds a
/// witness. Exactly one of the two searches must succeed; anything else means
/// the pair is not a Δ-presentation on this input.
pub fn in_delta(
    a: &Structure,
    sigma: &ProjectionSpec,
    pi: &ProjectionSpec,
    opts: &SearchOpts,
) -> Result<bool, ProjectionError> {
    let in_sigma = expansion_exists(a, sigma, opts)?;
    let in_pi = expansion_exists(a, pi, opts)?;
    match (in_sigma, in_pi) {
        (true, false) => Ok(true),
        (false, true) => Ok(false),
        (true, true) => Err(ProjectionError::InconsistentDelta(
            "both the Σ-side and the Π-side found witnesses".into(),
        )),
        (false, false) => Err(ProjectionError::InconsistentDelta(
            "neither the Σ-side nor the Π-side found a witness".into(),
        )),
    }
}

/// Outcome of checking `(∃ expansion ⊨ φ) ⇔ b ≤ F(a)` over a size grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub function: String,
    pub max_a: usize,
    pub max_b: usize,
    pub checked: u64,
    pub pass: bool,
    pub counterexample: Option<BoundCounterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCounterexample {
    pub a: usize,
    pub b: usize,
    pub expansion_exists: bool,
    pub expected: bool,
}

/// Checks that F is definably bounding via the given spec: for each positive
/// (a, b) in the grid, an expansion of the bare two-sorted structure of sizes
/// (a, b) satisfying the spec sentence exists iff b ≤ F(a). The sweep starts
/// at size 1: function-symbol specs have no valid expansion onto an empty
/// sort, and cardinal functions carry no information there.
pub fn verify_bounding(
    f: &BoundingFunction,
    spec: &ProjectionSpec,
    max_a: usize,
    max_b: usize,
    opts: &SearchOpts,
) -> Result<BoundReport, ProjectionError> {
    if spec.base.sorts.len() != 2
        || !spec.base.relations.is_empty()
        || !spec.base.functions.is_empty()
        || !spec.base.constants.is_empty()
    {
        return Err(ProjectionError::InvalidSpec(
            "verify_bounding expects a base vocabulary of two bare sorts".into(),
        ));
    }
    if !f.is_monotone_on_probe() {
        return Err(ProjectionError::InvalidSpec(format!(
            "{} is not non-decreasing",
            f.name()
        )));
    }
    let pairs: Vec<(usize, usize)> = (1..=max_a)
        .flat_map(|a| (1..=max_b).map(move |b| (a, b)))
        .collect();
    type GridResults = Result<Vec<((usize, usize), bool)>, ProjectionError>;
    let results: GridResults = pairs
        .par_iter()
        .map(|&(a, b)| {
            let bare = Structure::new_with_sizes(spec.base.clone(), &[a, b])?;
            let exists = expansion_exists(&bare, spec, opts)?;
            Ok(((a, b), exists))
        })
        .collect();
    let mut results = results?;
    results.sort_by_key(|&(k, _)| k);
    let mut counterexample = None;
    for ((a, b), exists) in &results {
        let expected = *b as u64 <= f.eval(*a as u64);
        if *exists != expected && counterexample.is_none() {
            counterexample = Some(BoundCounterexample {
                a: *a,
                b: *b,
                expansion_exists: *exists,
                expected,
            });
        }
    }
    Ok(BoundReport {
        function: f.name(),
        max_a,
        max_b,
        checked: results.len() as u64,
        pass: counterexample.is_none(),
        counterexample,
    })
}

/// Checks that the n-fold iteration of F is definably bounding, via n copies
/// of the base presentation chained through intermediate sorts.
///
/// A chained witness over sorts s0, ..., sn decomposes into independent
/// per-link witnesses, because the links share only a sort and no symbols;
/// conversely per-link witnesses assemble into a chained one. Existence
/// therefore factors through the intermediate sizes, which are swept up to
/// the base function's bound on the previous sort — sound once the base
/// presentation itself has passed [`verify_bounding`].
pub fn verify_bounding_iterated(
    f: &BoundingFunction,
    spec: &ProjectionSpec,
    iterations: u32,
    max_a: usize,
    max_b: usize,
    opts: &SearchOpts,
) -> Result<BoundReport, ProjectionError> {
    if iterations == 0 {
        return Err(ProjectionError::InvalidSpec(
            "iterated bounding needs at least one link".into(),
        ));
    }
    let base = verify_bounding(f, spec, max_a, max_b.max(max_a), opts)?;
    if !base.pass {
        return Ok(BoundReport {
            function: format!("{}^{iterations}", f.name()),
            max_a,
            max_b,
            checked: base.checked,
            pass: false,
            counterexample: base.counterexample,
        });
    }
    let mut link_cache: std::collections::BTreeMap<(usize, usize), bool> =
        std::collections::BTreeMap::new();
    let link_exists = |a: usize,
                       b: usize,
                       cache: &mut std::collections::BTreeMap<(usize, usize), bool>|
     -> Result<bool, ProjectionError> {
        if let Some(&v) = cache.get(&(a, b)) {
            return Ok(v);
        }
        let bare = Structure::new_with_sizes(spec.base.clone(), &[a, b])?;
        let v = expansion_exists(&bare, spec, opts)?;
        cache.insert((a, b), v);
        Ok(v)
    };
    let mut counterexample = None;
    let mut checked = 0u64;
    for a in 1..=max_a {
        for b in 1..=max_b {
            checked += 1;
            // chain through intermediate sizes m_i ≤ F(m_{i-1})
            let mut frontier: Vec<usize> = vec![a];
            for _ in 1..iterations {
                let mut next: Vec<usize> = Vec::new();
                for &m in &frontier {
                    let cap = f.eval(m as u64).min(64) as usize;
                    for m2 in 0..=cap {
                        if link_exists(m, m2, &mut link_cache)? && !next.contains(&m2) {
                            next.push(m2);
                        }
                    }
                }
                next.sort_unstable();
                frontier = next;
            }
            let mut exists = false;
            for &m in &frontier {
                if link_exists(m, b, &mut link_cache)? {
                    exists = true;
                    break;
                }
            }
            let expected = b as u64
                <= BoundingFunction::Iterate(Box::new(f.clone()), iterations).eval(a as u64);
            if exists != expected && counterexample.is_none() {
                counterexample = Some(BoundCounterexample {
                    a,
                    b,
                    expansion_exists: exists,
                    expected,
                });
            }
        }
    }
    Ok(BoundReport {
        function: format!("{}^{iterations}", f.name()),
        max_a,
        max_b,
        checked,
        pass: counterexample.is_none(),
        counterexample,
    })
}

/// The bare two-sorted base vocabulary used by definably-bounding specs.
pub fn bare_pair_vocabulary() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::builder()
            .sort("a")
            .sort("b")
            .build()
            .expect("two bare sorts"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::logic::{are_isomorphic, StructureEnumerator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Extensional E from sort a to sort b: distinct b's have distinct
    /// a-extensions, so |b| ≤ 2^|a|.
    fn alephbound_spec() -> ProjectionSpec {
        let base = bare_pair_vocabulary();
        let ext = Arc::new(
            Vocabulary::builder()
                .sort("a")
                .sort("b")
                .relation("E", &["a", "b"])
                .build()
                .unwrap(),
        );
        let phi = parse(
            "forall u:b . forall v:b . ((forall x:a . (E(x, u) <-> E(x, v))) -> u = v)",
            &ext,
        )
        .unwrap();
        ProjectionSpec::new(base, ext, phi, Bound::Func(BoundingFunction::Id)).unwrap()
    }

    /// f: a → b surjective, so |b| ≤ |a|.
    fn surjection_spec() -> ProjectionSpec {
        let base = bare_pair_vocabulary();
        let ext = Arc::new(
            Vocabulary::builder()
                .sort("a")
                .sort("b")
                .function("f", &["a"], "b")
                .build()
                .unwrap(),
        );
        let phi = parse("forall y:b . exists x:a . f(x) = y", &ext).unwrap();
        ProjectionSpec::new(base, ext, phi, Bound::Func(BoundingFunction::Id)).unwrap()
    }

    fn bare(a: usize, b: usize) -> Structure {
        Structure::new_with_sizes(bare_pair_vocabulary(), &[a, b]).unwrap()
    }

    #[test]
    fn sigma_projection_examples() {
        let spec = alephbound_spec();
        let opts = SearchOpts::default();
        // |b| = 2 ≤ 2^1: a witness exists
        let w = in_sigma_projection(&bare(1, 2), &spec, &opts)
            .unwrap()
            .expect("witness");
        assert_eq!(w.reduct(&spec.base).unwrap(), bare(1, 2));
        assert!(eval(&spec.sentence, &w, &Assignment::new()).unwrap());
        // |b| = 3 > 2^1: pigeonhole kills extensionality
        assert!(in_sigma_projection(&bare(1, 3), &spec, &opts)
            .unwrap()
            .is_none());
        assert!(expansion_exists(&bare(1, 2), &spec, &opts).unwrap());
        assert!(!expansion_exists(&bare(1, 3), &spec, &opts).unwrap());
    }

    #[test]
    fn tautology_spec_returns_the_structure_itself() {
        let base = bare_pair_vocabulary();
        let phi = parse("true", &base).unwrap();
        let spec = ProjectionSpec::new(base.clone(), base, phi, Bound::Func(BoundingFunction::Id))
            .unwrap();
        let a = bare(2, 1);
        let w = in_sigma_projection(&a, &spec, &SearchOpts::default())
            .unwrap()
            .unwrap();
        assert_eq!(w, a);
    }

    #[test]
    fn unbounded_spec_needs_hard_cap() {
        let base = bare_pair_vocabulary();
        let phi = parse("true", &base).unwrap();
        let spec = ProjectionSpec::new(base.clone(), base, phi, Bound::Unbounded).unwrap();
        let err = in_sigma_projection(&bare(1, 1), &spec, &SearchOpts::default());
        assert!(matches!(err, Err(ProjectionError::BoundMissing)));
        let ok = in_sigma_projection(
            &bare(1, 1),
            &spec,
            &SearchOpts {
                hard_cap: Some(4),
                ..Default::default()
            },
        );
        assert!(ok.unwrap().is_some());
    }

    /// Well-foundedness Δ-pair over one binary relation: the Σ-side adds a
    /// second sort with a staircase relation, the Π-side a nonempty set with
    /// no least element.
    fn lindstrom_pair() -> (ProjectionSpec, ProjectionSpec) {
        let base = Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("E", &["s", "s"])
                .build()
                .unwrap(),
        );
        let sigma_ext = Arc::new(
            Vocabulary::builder()
                .sort("s")
                .sort("x")
                .relation("E", &["s", "s"])
                .relation("R", &["s", "x"])
                .build()
                .unwrap(),
        );
        let sigma_phi = parse(
            "forall u:s . forall v:s . (E(u, v) -> \
               ((forall w:x . (R(u, w) -> R(v, w))) & !I p q (R(u, p))(R(v, q))))",
            &sigma_ext,
        )
        .unwrap();
        // total witness size ≤ 2|A|: the second sort needs at most |A| atoms
        let table: Vec<(u64, u64)> = (0..=16).map(|n| (n, 2 * n)).collect();
        let sigma =
            ProjectionSpec::new(base.clone(), sigma_ext, sigma_phi, Bound::Table(table)).unwrap();

        let pi_ext = Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("E", &["s", "s"])
                .relation("P", &["s"])
                .build()
                .unwrap(),
        );
        let pi_phi = parse(
            "(exists x:s . P(x)) & (forall x:s . (P(x) -> exists y:s . (P(y) & E(y, x))))",
            &pi_ext,
        )
        .unwrap();
        let pi =
            ProjectionSpec::new(base, pi_ext, pi_phi, Bound::Func(BoundingFunction::Id)).unwrap();
        (sigma, pi)
    }

    fn e_structure(n: usize, edges: &[(usize, usize)]) -> Structure {
        let v = Arc::new(
            Vocabulary::builder()
                .sort("s")
                .relation("E", &["s", "s"])
                .build()
                .unwrap(),
        );
        let mut s = Structure::new_with_sizes(v, &[n]).unwrap();
        for &(a, b) in edges {
            s.rel_mut(0).set(&[a, b], true);
        }
        s
    }

    #[test]
    fn delta_pair_examples() {
        let (sigma, pi) = lindstrom_pair();
        let opts = SearchOpts::default();
        let acyclic = e_structure(3, &[(0, 1), (1, 2)]);
        assert!(in_delta(&acyclic, &sigma, &pi, &opts).unwrap());
        let cycle = e_structure(2, &[(0, 1), (1, 0)]);
        assert!(!in_delta(&cycle, &sigma, &pi, &opts).unwrap());
        // the Π-side witness on the cycle is P = the cycle itself
        assert!(expansion_exists(&cycle, &pi, &opts).unwrap());

        // deliberately broken pair: both sides tautological
        let base = cycle.vocabulary().clone();
        let taut = parse("true", &base).unwrap();
        let t1 = ProjectionSpec::new(
            base.clone(),
            base.clone(),
            taut.clone(),
            Bound::Func(BoundingFunction::Id),
        )
        .unwrap();
        let t2 = ProjectionSpec::new(base.clone(), base, taut, Bound::Func(BoundingFunction::Id))
            .unwrap();
        let err = in_delta(&cycle, &t1, &t2, &opts);
        assert!(matches!(err, Err(ProjectionError::InconsistentDelta(_))));
    }

    #[test]
    fn verify_bounding_exp2_alephbound() {
        let report = verify_bounding(
            &BoundingFunction::Exp2,
            &alephbound_spec(),
            3,
            9,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(report.pass, "{:?}", report.counterexample);
        assert_eq!(report.checked, 27);
    }

    #[test]
    fn verify_bounding_id_surjection() {
        let report = verify_bounding(
            &BoundingFunction::Id,
            &surjection_spec(),
            4,
            4,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(report.pass, "{:?}", report.counterexample);
    }

    #[test]
    fn verify_bounding_mismatched_function() {
        // 2^κ admits (1, 2) but no surjection from 1 element onto 2
        let report = verify_bounding(
            &BoundingFunction::Exp2,
            &surjection_spec(),
            2,
            3,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(!report.pass);
        let ce = report.counterexample.unwrap();
        assert_eq!((ce.a, ce.b), (1, 2));
        assert!(!ce.expansion_exists);
        assert!(ce.expected);
    }

    #[test]
    fn monotone_bound_never_flips_found_to_none() {
        let spec = alephbound_spec();
        let opts = SearchOpts::default();
        // same spec with a larger bound (pointwise): id ≤ exp2
        let bigger = ProjectionSpec::new(
            spec.base.clone(),
            spec.extended.clone(),
            spec.sentence.clone(),
            Bound::Func(BoundingFunction::Exp2),
        )
        .unwrap();
        for a in 0..=2 {
            for b in 0..=3 {
                let s = bare(a, b);
                if in_sigma_projection(&s, &spec, &opts).unwrap().is_some() {
                    assert!(in_sigma_projection(&s, &bigger, &opts).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn sigma_projection_is_isomorphism_closed() {
        let (sigma, _) = lindstrom_pair();
        let opts = SearchOpts::default();
        let vocab = e_structure(0, &[]).vocabulary().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all: Vec<Structure> = StructureEnumerator::new(vocab, &[3], false).collect();
        for _ in 0..40 {
            let a = &all[rng.gen_range(0..all.len())];
            let b = &all[rng.gen_range(0..all.len())];
            if are_isomorphic(a, b).unwrap().is_some() {
                assert_eq!(
                    expansion_exists(a, &sigma, &opts).unwrap(),
                    expansion_exists(b, &sigma, &opts).unwrap()
                );
            }
        }
    }

    #[test]
    fn iterated_bounding_via_chained_links() {
        // two chained subset-coding links realize 2^(2^κ)
        let report = verify_bounding_iterated(
            &BoundingFunction::Exp2,
            &alephbound_spec(),
            2,
            2,
            5,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(report.pass, "{:?}", report.counterexample);
        assert_eq!(report.function, "exp2^2");
        // boundary sanity: the claim distinguishes 4 = 2^(2^1) from 5
        assert_eq!(
            BoundingFunction::Iterate(Box::new(BoundingFunction::Exp2), 2).eval(1),
            4
        );

        // chained surjections stay at the identity
        let report = verify_bounding_iterated(
            &BoundingFunction::Id,
            &surjection_spec(),
            3,
            3,
            4,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(report.pass, "{:?}", report.counterexample);

        // mismatched function: chained surjections cannot reach 2^κ iterated
        let report = verify_bounding_iterated(
            &BoundingFunction::Exp2,
            &surjection_spec(),
            2,
            2,
            3,
            &SearchOpts::default(),
        )
        .unwrap();
        assert!(!report.pass);
        let ce = report.counterexample.unwrap();
        assert_eq!((ce.a, ce.b), (1, 2));
    }

    #[test]
    fn profile_search_agrees_with_raw_search() {
        // the multiset fast path and the raw odometer must decide alike
        let specs = [alephbound_spec(), surjection_spec()];
        let opts = SearchOpts::default();
        for spec in &specs {
            for a in 0..=3usize {
                for b in 0..=4usize {
                    let s = bare(a, b);
                    let raw = in_sigma_projection(&s, spec, &opts).unwrap().is_some();
                    let fast = expansion_exists(&s, spec, &opts).unwrap();
                    assert_eq!(raw, fast, "spec {}, sizes ({a}, {b})", spec.bound_name());
                }
            }
        }
        let (sigma, pi) = lindstrom_pair();
        let vocab = e_structure(0, &[]).vocabulary().clone();
        for n in 0..=3usize {
            for s in StructureEnumerator::new(vocab.clone(), &[n], false) {
                for spec in [&sigma, &pi] {
                    let raw = in_sigma_projection(&s, spec, &opts).unwrap().is_some();
                    let fast = expansion_exists(&s, spec, &opts).unwrap();
                    assert_eq!(raw, fast, "size {n}");
                }
            }
        }
    }

    #[test]
    fn bounding_functions() {
        assert_eq!(BoundingFunction::Exp2.eval(3), 8);
        assert_eq!(BoundingFunction::Exp2.eval(100), u64::MAX);
        assert_eq!(BoundingFunction::DoubleExp2.eval(2), 16);
        let beth2 = BoundingFunction::Iterate(Box::new(BoundingFunction::Exp2), 2);
        assert_eq!(beth2.eval(1), 4);
        assert!(beth2.is_monotone_on_probe());
    }
}
