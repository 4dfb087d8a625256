//! Many-sorted vocabularies and finite structures: reducts, expansions,
//! enumeration, isomorphism search, and quantifier-rank-bounded equivalence.
//!
//! Elements of a sort are the indices `0..size`; structures also carry a name
//! per element so documents round-trip losslessly. Relations are stored as
//! bitsets over the mixed-radix tuple space, functions as flat total tables.

mod enumerate;
mod iso;

pub use enumerate::{size_assignments, SlotOdometer, StructureEnumerator};
pub use iso::{are_isomorphic, canonical_key, qr_equivalent};

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("structures have different vocabularies")]
    VocabularyMismatch,
    #[error("not a subvocabulary: {0}")]
    NotSubvocabulary(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    /// Argument sorts, as indices into the vocabulary's sort list.
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub args: Vec<usize>,
    pub result: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantDecl {
    pub name: String,
    pub sort: usize,
}

/// A finite many-sorted signature.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    pub sorts: Vec<String>,
    pub relations: Vec<RelationDecl>,
    pub functions: Vec<FunctionDecl>,
    pub constants: Vec<ConstantDecl>,
}

/// Builder-style construction; `build` checks name uniqueness.
#[derive(Default)]
pub struct VocabularyBuilder {
    vocab: Vocabulary,
    error: Option<LogicError>,
}

impl VocabularyBuilder {
    pub fn sort(mut self, name: &str) -> Self {
        self.vocab.sorts.push(name.to_string());
        self
    }

    fn sort_id(&mut self, name: &str) -> usize {
        match self.vocab.sorts.iter().position(|s| s == name) {
            Some(i) => i,
            None => {
                self.error
                    .get_or_insert(LogicError::InvalidVocabulary(format!(
                        "sort {name} not declared"
                    )));
                0
            }
        }
    }

    pub fn relation(mut self, name: &str, args: &[&str]) -> Self {
        let args = args.iter().map(|a| self.sort_id(a)).collect();
        self.vocab.relations.push(RelationDecl {
            name: name.to_string(),
            args,
        });
        self
    }

    pub fn function(mut self, name: &str, args: &[&str], result: &str) -> Self {
        let args = args.iter().map(|a| self.sort_id(a)).collect();
        let result = self.sort_id(result);
        self.vocab.functions.push(FunctionDecl {
            name: name.to_string(),
            args,
            result,
        });
        self
    }

    pub fn constant(mut self, name: &str, sort: &str) -> Self {
        let sort = self.sort_id(sort);
        self.vocab.constants.push(ConstantDecl {
            name: name.to_string(),
            sort,
        });
        self
    }

    pub fn build(self) -> Result<Vocabulary, LogicError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let v = self.vocab;
        let mut names: Vec<&str> = v
            .relations
            .iter()
            .map(|r| r.name.as_str())
            .chain(v.functions.iter().map(|f| f.name.as_str()))
            .chain(v.constants.iter().map(|c| c.name.as_str()))
            .collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(LogicError::InvalidVocabulary(
                "duplicate symbol name".into(),
            ));
        }
        let mut sorts = v.sorts.clone();
        sorts.sort_unstable();
        if sorts.windows(2).any(|w| w[0] == w[1]) {
            return Err(LogicError::InvalidVocabulary("duplicate sort name".into()));
        }
        Ok(v)
    }
}

impl Vocabulary {
    pub fn builder() -> VocabularyBuilder {
        VocabularyBuilder::default()
    }

    pub fn sort_id(&self, name: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s == name)
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn function_id(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn constant_id(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c.name == name)
    }

    /// True iff every sort and symbol of `self` occurs in `other` with the
    /// same profile (matched by name).
    pub fn is_subvocabulary_of(&self, other: &Vocabulary) -> bool {
        self.check_subvocabulary(other).is_ok()
    }

    pub fn check_subvocabulary(&self, other: &Vocabulary) -> Result<(), LogicError> {
        let missing = |what: &str| LogicError::NotSubvocabulary(what.to_string());
        for s in &self.sorts {
            if other.sort_id(s).is_none() {
                return Err(missing(&format!("sort {s}")));
            }
        }
        let sort_name = |v: &Vocabulary, id: usize| v.sorts[id].clone();
        for r in &self.relations {
            let o = other
                .relation_id(&r.name)
                .ok_or_else(|| missing(&format!("relation {}", r.name)))?;
            let or = &other.relations[o];
            let same = r.args.len() == or.args.len()
                && r.args
                    .iter()
                    .zip(&or.args)
                    .all(|(&a, &b)| sort_name(self, a) == sort_name(other, b));
            if !same {
                return Err(missing(&format!("relation {} (profile differs)", r.name)));
            }
        }
        for f in &self.functions {
            let o = other
                .function_id(&f.name)
                .ok_or_else(|| missing(&format!("function {}", f.name)))?;
            let of = &other.functions[o];
            let same = f.args.len() == of.args.len()
                && f.args
                    .iter()
                    .zip(&of.args)
                    .all(|(&a, &b)| sort_name(self, a) == sort_name(other, b))
                && sort_name(self, f.result) == sort_name(other, of.result);
            if !same {
                return Err(missing(&format!("function {} (profile differs)", f.name)));
            }
        }
        for c in &self.constants {
            let o = other
                .constant_id(&c.name)
                .ok_or_else(|| missing(&format!("constant {}", c.name)))?;
            if sort_name(self, c.sort) != sort_name(other, other.constants[o].sort) {
                return Err(missing(&format!("constant {} (sort differs)", c.name)));
            }
        }
        Ok(())
    }
}

/// A relation interpretation: a bitset over the mixed-radix tuple space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    sizes: Vec<usize>,
    space: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(sizes: Vec<usize>) -> Self {
        let space = sizes.iter().product::<usize>();
        Relation {
            sizes,
            space,
            bits: vec![0; space.div_ceil(64)],
        }
    }

    pub fn space(&self) -> usize {
        self.space
    }

    pub fn arity(&self) -> usize {
        self.sizes.len()
    }

    fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.sizes.len());
        let mut idx = 0usize;
        for (&t, &s) in tuple.iter().zip(&self.sizes) {
            debug_assert!(t < s);
            idx = idx * s + t;
        }
        idx
    }

    pub fn holds(&self, tuple: &[usize]) -> bool {
        let i = self.index(tuple);
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn set(&mut self, tuple: &[usize], value: bool) {
        let i = self.index(tuple);
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn holds_index(&self, i: usize) -> bool {
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn set_index(&mut self, i: usize, value: bool) {
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|b| *b = 0);
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.sizes.len()];
        for k in (0..self.sizes.len()).rev() {
            tuple[k] = idx % self.sizes[k];
            idx /= self.sizes[k];
        }
        tuple
    }

    /// All holding tuples, in ascending tuple-index order.
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        (0..self.space)
            .filter(|&i| self.holds_index(i))
            .map(|i| self.decode(i))
            .collect()
    }

    pub fn raw_bits(&self) -> &[u64] {
        &self.bits
    }
}

/// A total function interpretation as a flat table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncTable {
    arg_sizes: Vec<usize>,
    pub result_size: usize,
    data: Vec<usize>,
}

impl FuncTable {
    pub fn constant_zero(arg_sizes: Vec<usize>, result_size: usize) -> Self {
        let space = arg_sizes.iter().product::<usize>();
        FuncTable {
            arg_sizes,
            result_size,
            data: vec![0; space],
        }
    }

    pub fn space(&self) -> usize {
        self.data.len()
    }

    fn index(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arg_sizes.len());
        let mut idx = 0usize;
        for (&a, &s) in args.iter().zip(&self.arg_sizes) {
            debug_assert!(a < s);
            idx = idx * s + a;
        }
        idx
    }

    pub fn get(&self, args: &[usize]) -> usize {
        self.data[self.index(args)]
    }

    pub fn set(&mut self, args: &[usize], value: usize) {
        debug_assert!(value < self.result_size);
        let i = self.index(args);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[usize] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [usize] {
        &mut self.data
    }
}

/// A finite many-sorted structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    vocab: Arc<Vocabulary>,
    /// Element names per sort; the domain of sort s is `0..domains[s].len()`.
    domains: Vec<Vec<String>>,
    rels: Vec<Relation>,
    funcs: Vec<FuncTable>,
    consts: Vec<usize>,
}

/// Default element names for enumerated structures: `<sort>0`, `<sort>1`, ...
pub fn default_names(sort: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{sort}{i}")).collect()
}

impl Structure {
    /// A structure with all relations empty, all functions constantly the
    /// first element, and all constants the first element. Fails if a
    /// constant's sort is empty, or a function's result sort is empty while
    /// its argument space is not.
    pub fn new(vocab: Arc<Vocabulary>, domains: Vec<Vec<String>>) -> Result<Self, LogicError> {
        if domains.len() != vocab.sorts.len() {
            return Err(LogicError::InvalidStructure(
                "domain count does not match sort count".into(),
            ));
        }
        let size = |s: usize| domains[s].len();
        let rels = vocab
            .relations
            .iter()
            .map(|r| Relation::empty(r.args.iter().map(|&s| size(s)).collect()))
            .collect();
        let mut funcs = Vec::new();
        for f in &vocab.functions {
            let arg_sizes: Vec<usize> = f.args.iter().map(|&s| size(s)).collect();
            let space = arg_sizes.iter().product::<usize>();
            if space > 0 && size(f.result) == 0 {
                return Err(LogicError::InvalidStructure(format!(
                    "function {} has no possible value: result sort is empty",
                    f.name
                )));
            }
            funcs.push(FuncTable::constant_zero(arg_sizes, size(f.result)));
        }
        let mut consts = Vec::new();
        for c in &vocab.constants {
            if size(c.sort) == 0 {
                return Err(LogicError::InvalidStructure(format!(
                    "constant {} has no possible value: sort is empty",
                    c.name
                )));
            }
            consts.push(0);
        }
        Ok(Structure {
            vocab,
            domains,
            rels,
            funcs,
            consts,
        })
    }

    pub fn new_with_sizes(vocab: Arc<Vocabulary>, sizes: &[usize]) -> Result<Self, LogicError> {
        let domains = vocab
            .sorts
            .iter()
            .zip(sizes)
            .map(|(s, &n)| default_names(s, n))
            .collect();
        Structure::new(vocab, domains)
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn sort_size(&self, sort: usize) -> usize {
        self.domains[sort].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.domains.iter().map(|d| d.len()).collect()
    }

    /// Total number of elements across all sorts.
    pub fn total_size(&self) -> usize {
        self.domains.iter().map(|d| d.len()).sum()
    }

    pub fn element_names(&self, sort: usize) -> &[String] {
        &self.domains[sort]
    }

    pub fn element_index(&self, sort: usize, name: &str) -> Option<usize> {
        self.domains[sort].iter().position(|e| e == name)
    }

    pub fn rel(&self, id: usize) -> &Relation {
        &self.rels[id]
    }

    pub fn rel_mut(&mut self, id: usize) -> &mut Relation {
        &mut self.rels[id]
    }

    pub fn func(&self, id: usize) -> &FuncTable {
        &self.funcs[id]
    }

    pub fn func_mut(&mut self, id: usize) -> &mut FuncTable {
        &mut self.funcs[id]
    }

    pub fn constant(&self, id: usize) -> usize {
        self.consts[id]
    }

    pub fn set_constant(&mut self, id: usize, value: usize) {
        debug_assert!(value < self.sort_size(self.vocab.constants[id].sort));
        self.consts[id] = value;
    }

    /// The reduct (projection) to a subvocabulary: only domains of τ-sorts
    /// survive, and interpretations of dropped symbols are discarded.
    pub fn reduct(&self, tau: &Arc<Vocabulary>) -> Result<Structure, LogicError> {
        tau.check_subvocabulary(&self.vocab)?;
        let domains = tau
            .sorts
            .iter()
            .map(|s| self.domains[self.vocab.sort_id(s).unwrap()].clone())
            .collect();
        let rels = tau
            .relations
            .iter()
            .map(|r| self.rels[self.vocab.relation_id(&r.name).unwrap()].clone())
            .collect();
        let funcs = tau
            .functions
            .iter()
            .map(|f| self.funcs[self.vocab.function_id(&f.name).unwrap()].clone())
            .collect();
        let consts = tau
            .constants
            .iter()
            .map(|c| self.consts[self.vocab.constant_id(&c.name).unwrap()])
            .collect();
        Ok(Structure {
            vocab: tau.clone(),
            domains,
            rels,
            funcs,
            consts,
        })
    }

    /// Expands to a supervocabulary: existing interpretations are kept, new
    /// sorts get the given domains, new symbols get default interpretations.
    pub fn expand(
        &self,
        tau_prime: &Arc<Vocabulary>,
        new_domains: &[(String, Vec<String>)],
    ) -> Result<Structure, LogicError> {
        self.vocab.check_subvocabulary(tau_prime)?;
        let mut domains = Vec::new();
        for s in &tau_prime.sorts {
            if let Some(old) = self.vocab.sort_id(s) {
                domains.push(self.domains[old].clone());
            } else if let Some((_, d)) = new_domains.iter().find(|(name, _)| name == s) {
                domains.push(d.clone());
            } else {
                domains.push(Vec::new());
            }
        }
        let mut out = Structure::new(tau_prime.clone(), domains)?;
        for (i, r) in tau_prime.relations.iter().enumerate() {
            if let Some(old) = self.vocab.relation_id(&r.name) {
                out.rels[i] = self.rels[old].clone();
            }
        }
        for (i, f) in tau_prime.functions.iter().enumerate() {
            if let Some(old) = self.vocab.function_id(&f.name) {
                out.funcs[i] = self.funcs[old].clone();
            }
        }
        for (i, c) in tau_prime.constants.iter().enumerate() {
            if let Some(old) = self.vocab.constant_id(&c.name) {
                out.consts[i] = self.consts[old];
            }
        }
        Ok(out)
    }

    /// A flat encoding of all interpretations, used for canonical ordering.
    /// Lower keys come first in the deterministic enumeration order.
    pub fn encoding_key(&self) -> Vec<u64> {
        let mut key = Vec::new();
        for r in &self.rels {
            key.extend_from_slice(&r.bits);
        }
        for f in &self.funcs {
            key.extend(f.data.iter().map(|&v| v as u64));
        }
        key.extend(self.consts.iter().map(|&v| v as u64));
        key
    }

    /// Applies per-sort permutations: element e of sort s becomes perms[s][e].
    pub fn apply_permutation(&self, perms: &[Vec<usize>]) -> Structure {
        let mut out = self.clone();
        for (s, perm) in perms.iter().enumerate() {
            for (e, &img) in perm.iter().enumerate() {
                out.domains[s][img] = self.domains[s][e].clone();
            }
        }
        for (id, decl) in self.vocab.relations.iter().enumerate() {
            let mut fresh = Relation::empty(self.rels[id].sizes.clone());
            for t in self.rels[id].tuples() {
                let mapped: Vec<usize> = t
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, &s)| perms[s][e])
                    .collect();
                fresh.set(&mapped, true);
            }
            out.rels[id] = fresh;
        }
        for (id, decl) in self.vocab.functions.iter().enumerate() {
            let mut fresh = self.funcs[id].clone();
            let arg_sizes: Vec<usize> = decl.args.iter().map(|&s| self.sort_size(s)).collect();
            for args in tuple_space(&arg_sizes) {
                let mapped: Vec<usize> = args
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, &s)| perms[s][e])
                    .collect();
                fresh.set(&mapped, perms[decl.result][self.funcs[id].get(&args)]);
            }
            out.funcs[id] = fresh;
        }
        for (id, decl) in self.vocab.constants.iter().enumerate() {
            out.consts[id] = perms[decl.sort][self.consts[id]];
        }
        out
    }
}

/// All tuples over the given sizes, in ascending mixed-radix order.
pub fn tuple_space(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if sizes.contains(&0) && !sizes.is_empty() {
        return out;
    }
    let mut cur = vec![0usize; sizes.len()];
    loop {
        out.push(cur.clone());
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < sizes[k] {
                break;
            }
            cur[k] = 0;
        }
    }
}

/// Per-sort injective maps witnessing a substructure embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// maps[s][e] is the image of element e of sort s.
    pub maps: Vec<Vec<usize>>,
}

impl Embedding {
    /// Checks that the map is injective per sort and preserves all relations
    /// (in both directions, an induced embedding), functions and constants.
    pub fn is_valid(&self, from: &Structure, to: &Structure) -> bool {
        if from.vocab != to.vocab {
            return false;
        }
        let v = from.vocab.clone();
        for (s, m) in self.maps.iter().enumerate() {
            if m.len() != from.sort_size(s) {
                return false;
            }
            let mut seen = vec![false; to.sort_size(s)];
            for &img in m {
                if img >= to.sort_size(s) || seen[img] {
                    return false;
                }
                seen[img] = true;
            }
        }
        for (id, decl) in v.relations.iter().enumerate() {
            let sizes: Vec<usize> = decl.args.iter().map(|&s| from.sort_size(s)).collect();
            for t in tuple_space(&sizes) {
                let mapped: Vec<usize> = t
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, &s)| self.maps[s][e])
                    .collect();
                if from.rel(id).holds(&t) != to.rel(id).holds(&mapped) {
                    return false;
                }
            }
        }
        for (id, decl) in v.functions.iter().enumerate() {
            let sizes: Vec<usize> = decl.args.iter().map(|&s| from.sort_size(s)).collect();
            for t in tuple_space(&sizes) {
                let mapped: Vec<usize> = t
                    .iter()
                    .zip(&decl.args)
                    .map(|(&e, &s)| self.maps[s][e])
                    .collect();
                if self.maps[decl.result][from.func(id).get(&t)] != to.func(id).get(&mapped) {
                    return false;
                }
            }
        }
        for (id, decl) in v.constants.iter().enumerate() {
            if self.maps[decl.sort][from.constant(id)] != to.constant(id) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, name) in self.vocab.sorts.iter().enumerate() {
            writeln!(f, "sort {name} = {}", self.domains[s].join(" "))?;
        }
        for (id, r) in self.vocab.relations.iter().enumerate() {
            let args: Vec<String> = r
                .args
                .iter()
                .map(|&s| self.vocab.sorts[s].clone())
                .collect();
            write!(f, "rel {}({}) =", r.name, args.join(", "))?;
            for t in self.rels[id].tuples() {
                let names: Vec<&str> = t
                    .iter()
                    .zip(&r.args)
                    .map(|(&e, &s)| self.domains[s][e].as_str())
                    .collect();
                write!(f, " ({})", names.join(", "))?;
            }
            writeln!(f)?;
        }
        for (id, fd) in self.vocab.functions.iter().enumerate() {
            let args: Vec<String> = fd
                .args
                .iter()
                .map(|&s| self.vocab.sorts[s].clone())
                .collect();
            write!(
                f,
                "func {}({}) -> {} =",
                fd.name,
                args.join(", "),
                self.vocab.sorts[fd.result]
            )?;
            let sizes: Vec<usize> = fd.args.iter().map(|&s| self.domains[s].len()).collect();
            for t in tuple_space(&sizes) {
                let names: Vec<&str> = t
                    .iter()
                    .zip(&fd.args)
                    .map(|(&e, &s)| self.domains[s][e].as_str())
                    .collect();
                let val = &self.domains[fd.result][self.funcs[id].get(&t)];
                write!(f, " ({}) -> {}", names.join(", "), val)?;
            }
            writeln!(f)?;
        }
        for (id, c) in self.vocab.constants.iter().enumerate() {
            writeln!(
                f,
                "const {}: {} = {}",
                c.name, self.vocab.sorts[c.sort], self.domains[c.sort][self.consts[id]]
            )?;
        }
        Ok(())
    }
}
