//! Deterministic enumeration of all structures over a vocabulary with fixed
//! domain sizes, optionally up to isomorphism.
//!
//! The order is a mixed-radix counter over the interpretation slots: relation
//! membership bits (in tuple-index order), then function table entries, then
//! constants, with the first slot least significant. The first structure
//! yielded is the one with all relations empty, all functions constantly the
//! first element, and all constants the first element.

use super::iso::all_sort_permutations;
use super::{LogicError, Structure, Vocabulary};
use std::sync::Arc;

pub struct StructureEnumerator {
    current: Option<Structure>,
    up_to_iso: bool,
    perms: Vec<Vec<Vec<usize>>>,
}

impl StructureEnumerator {
    /// Enumerate all structures over `vocab` with the given per-sort sizes.
    /// If the sizes admit no structure at all (a constant over an empty sort),
    /// the enumeration is empty.
    pub fn new(vocab: Arc<Vocabulary>, sizes: &[usize], up_to_iso: bool) -> Self {
        let current = Structure::new_with_sizes(vocab, sizes).ok();
        let perms = if up_to_iso && current.is_some() {
            all_sort_permutations(sizes)
        } else {
            Vec::new()
        };
        StructureEnumerator {
            current,
            up_to_iso,
            perms,
        }
    }

    /// Collects at most `cap` structures, erroring if the enumeration is larger.
    pub fn collect_capped(self, cap: usize) -> Result<Vec<Structure>, LogicError> {
        let mut out = Vec::new();
        for s in self {
            if out.len() >= cap {
                return Err(LogicError::ResourceCap(format!(
                    "structure enumeration exceeded cap {cap}"
                )));
            }
            out.push(s);
        }
        Ok(out)
    }

    fn is_orbit_minimal(&self, s: &Structure) -> bool {
        let key = s.encoding_key();
        self.perms
            .iter()
            .all(|perm| key <= s.apply_permutation(perm).encoding_key())
    }
}

/// Advances the interpretation odometer in place; false on wraparound.
pub(crate) fn advance_interpretations(s: &mut Structure) -> bool {
    let vocab = s.vocabulary().clone();
    for id in 0..vocab.relations.len() {
        let rel = s.rel_mut(id);
        for i in 0..rel.space() {
            if rel.holds_index(i) {
                rel.set_index(i, false);
            } else {
                rel.set_index(i, true);
                return true;
            }
        }
    }
    for id in 0..vocab.functions.len() {
        let func = s.func_mut(id);
        let radix = func.result_size;
        for e in func.data_mut() {
            if *e + 1 < radix {
                *e += 1;
                return true;
            }
            *e = 0;
        }
    }
    for id in 0..vocab.constants.len() {
        let sort = vocab.constants[id].sort;
        let size = s.sort_size(sort);
        let v = s.constant(id);
        if v + 1 < size {
            s.set_constant(id, v + 1);
            return true;
        }
        s.set_constant(id, 0);
    }
    false
}

impl Iterator for StructureEnumerator {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        loop {
            let cur = self.current.as_mut()?;
            let candidate = cur.clone();
            if !advance_interpretations(cur) {
                self.current = None;
            }
            if !self.up_to_iso || self.is_orbit_minimal(&candidate) {
                return Some(candidate);
            }
        }
    }
}

/// A counter over a chosen set of interpretation slots of a structure,
/// leaving everything else fixed. Used for constrained expansion searches
/// (only the new symbols vary, or only the tuples touching new atoms).
pub struct SlotOdometer {
    /// (relation id, tuple index)
    pub rel_slots: Vec<(usize, usize)>,
    /// (function id, entry index, radix)
    pub func_slots: Vec<(usize, usize, usize)>,
    /// (constant id, radix)
    pub const_slots: Vec<(usize, usize)>,
}

impl SlotOdometer {
    /// Every slot of the given symbols.
    pub fn for_symbols(
        s: &Structure,
        rel_ids: &[usize],
        func_ids: &[usize],
        const_ids: &[usize],
    ) -> Self {
        let vocab = s.vocabulary().clone();
        let mut rel_slots = Vec::new();
        for &id in rel_ids {
            for i in 0..s.rel(id).space() {
                rel_slots.push((id, i));
            }
        }
        let mut func_slots = Vec::new();
        for &id in func_ids {
            let radix = s.sort_size(vocab.functions[id].result);
            for i in 0..s.func(id).space() {
                func_slots.push((id, i, radix));
            }
        }
        let const_slots = const_ids
            .iter()
            .map(|&id| (id, s.sort_size(vocab.constants[id].sort)))
            .collect();
        SlotOdometer {
            rel_slots,
            func_slots,
            const_slots,
        }
    }

    /// Resets all covered slots to their least values.
    pub fn reset(&self, s: &mut Structure) {
        for &(id, i) in &self.rel_slots {
            s.rel_mut(id).set_index(i, false);
        }
        for &(id, i, _) in &self.func_slots {
            s.func_mut(id).data_mut()[i] = 0;
        }
        for &(id, _) in &self.const_slots {
            s.set_constant(id, 0);
        }
    }

    /// Number of configurations this odometer ranges over.
    pub fn configurations(&self) -> u128 {
        let mut n: u128 = 1u128 << self.rel_slots.len().min(127);
        for &(_, _, radix) in &self.func_slots {
            n = n.saturating_mul(radix as u128);
        }
        for &(_, radix) in &self.const_slots {
            n = n.saturating_mul(radix as u128);
        }
        n
    }

    /// Advances to the next configuration; false on wraparound.
    pub fn advance(&self, s: &mut Structure) -> bool {
        for &(id, i) in &self.rel_slots {
            let rel = s.rel_mut(id);
            if rel.holds_index(i) {
                rel.set_index(i, false);
            } else {
                rel.set_index(i, true);
                return true;
            }
        }
        for &(id, i, radix) in &self.func_slots {
            let data = s.func_mut(id).data_mut();
            if data[i] + 1 < radix {
                data[i] += 1;
                return true;
            }
            data[i] = 0;
        }
        for &(id, radix) in &self.const_slots {
            let v = s.constant(id);
            if v + 1 < radix {
                s.set_constant(id, v + 1);
                return true;
            }
            s.set_constant(id, 0);
        }
        false
    }
}

/// All per-sort size tuples within the given inclusive ranges, ordered by
/// total size and then lexicographically.
pub fn size_assignments(ranges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = ranges.iter().map(|&(lo, _)| lo).collect();
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut k = ranges.len();
        loop {
            if k == 0 {
                out.sort_by_key(|sizes| (sizes.iter().sum::<usize>(), sizes.clone()));
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] <= ranges[k].1 {
                break;
            }
            cur[k] = ranges[k].0;
        }
    }
}
