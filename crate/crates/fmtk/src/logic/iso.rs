//! Isomorphism search, canonical forms, and Ehrenfeucht–Fraïssé games.

use super::{Embedding, LogicError, Structure};

/// All per-sort permutation tuples for the given sizes. The product over
/// sorts of n! grows fast; callers stay at desk scale.
pub(crate) fn all_sort_permutations(sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn perms_of(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        let mut used = vec![false; n];
        fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for v in 0..n {
                if !used[v] {
                    used[v] = true;
                    cur.push(v);
                    rec(n, cur, used, out);
                    cur.pop();
                    used[v] = false;
                }
            }
        }
        rec(n, &mut cur, &mut used, &mut out);
        out
    }
    let per_sort: Vec<Vec<Vec<usize>>> = sizes.iter().map(|&n| perms_of(n)).collect();
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for options in per_sort {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for partial in &out {
            for opt in &options {
                let mut p = partial.clone();
                p.push(opt.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// The least interpretation key over all permuted copies of the structure.
/// Two structures over the same vocabulary and sizes are isomorphic iff their
/// canonical keys are equal.
pub fn canonical_key(s: &Structure) -> Vec<u64> {
    all_sort_permutations(&s.sizes())
        .iter()
        .map(|p| s.apply_permutation(p).encoding_key())
        .min()
        .expect("at least the identity permutation")
}

/// Searches for an isomorphism, returning the lexicographically least witness
/// (ordered by sort, then element, then image).
pub fn are_isomorphic(a: &Structure, b: &Structure) -> Result<Option<Embedding>, LogicError> {
    if a.vocabulary() != b.vocabulary() {
        return Err(LogicError::VocabularyMismatch);
    }
    if a.sizes() != b.sizes() {
        return Ok(None);
    }
    let sizes = a.sizes();
    let slots: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(s, &n)| (0..n).map(move |e| (s, e)))
        .collect();
    let mut maps: Vec<Vec<usize>> = sizes.iter().map(|&n| vec![usize::MAX; n]).collect();
    let mut used: Vec<Vec<bool>> = sizes.iter().map(|&n| vec![false; n]).collect();

    fn consistent_so_far(a: &Structure, b: &Structure, maps: &[Vec<usize>]) -> bool {
        let v = a.vocabulary();
        for (id, decl) in v.relations.iter().enumerate() {
            for t in a.rel(id).tuples() {
                if let Some(img) = map_tuple(&t, &decl.args, maps) {
                    if !b.rel(id).holds(&img) {
                        return false;
                    }
                }
            }
            for t in b.rel(id).tuples() {
                if let Some(pre) = preimage_tuple(&t, &decl.args, maps) {
                    if !a.rel(id).holds(&pre) {
                        return false;
                    }
                }
            }
        }
        for (id, decl) in v.constants.iter().enumerate() {
            let img = maps[decl.sort][a.constant(id)];
            if img != usize::MAX && img != b.constant(id) {
                return false;
            }
        }
        // function congruence is checked only on fully mapped entries; the
        // full embedding check at the leaf covers the rest
        for (id, decl) in v.functions.iter().enumerate() {
            let sizes: Vec<usize> = decl.args.iter().map(|&s| a.sort_size(s)).collect();
            for t in super::tuple_space(&sizes) {
                if let Some(img) = map_tuple(&t, &decl.args, maps) {
                    let val_img = maps[decl.result][a.func(id).get(&t)];
                    if val_img != usize::MAX && val_img != b.func(id).get(&img) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn map_tuple(t: &[usize], args: &[usize], maps: &[Vec<usize>]) -> Option<Vec<usize>> {
        t.iter()
            .zip(args)
            .map(|(&e, &s)| {
                let img = maps[s][e];
                (img != usize::MAX).then_some(img)
            })
            .collect()
    }

    fn preimage_tuple(t: &[usize], args: &[usize], maps: &[Vec<usize>]) -> Option<Vec<usize>> {
        t.iter()
            .zip(args)
            .map(|(&e, &s)| maps[s].iter().position(|&img| img == e))
            .collect()
    }

    fn search(
        a: &Structure,
        b: &Structure,
        slots: &[(usize, usize)],
        depth: usize,
        maps: &mut Vec<Vec<usize>>,
        used: &mut Vec<Vec<bool>>,
    ) -> bool {
        if depth == slots.len() {
            return Embedding { maps: maps.clone() }.is_valid(a, b);
        }
        let (s, e) = slots[depth];
        for img in 0..b.sort_size(s) {
            if used[s][img] {
                continue;
            }
            maps[s][e] = img;
            used[s][img] = true;
            if consistent_so_far(a, b, maps) && search(a, b, slots, depth + 1, maps, used) {
                return true;
            }
            maps[s][e] = usize::MAX;
            used[s][img] = false;
        }
        false
    }

    if search(a, b, &slots, 0, &mut maps, &mut used) {
        Ok(Some(Embedding { maps }))
    } else {
        Ok(None)
    }
}

/// True iff the Duplicator wins the k-round Ehrenfeucht–Fraïssé game,
/// equivalently the structures agree on all first-order sentences of
/// quantifier rank ≤ k. Relational vocabularies with constants only.
pub fn qr_equivalent(a: &Structure, b: &Structure, k: u32) -> Result<bool, LogicError> {
    if a.vocabulary() != b.vocabulary() {
        return Err(LogicError::VocabularyMismatch);
    }
    if !a.vocabulary().functions.is_empty() {
        return Err(LogicError::Unsupported(
            "EF games over function symbols".into(),
        ));
    }
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    Ok(duplicator_wins(a, b, k, &mut pairs))
}

/// The position (constants plus the chosen pairs) is a partial isomorphism:
/// the pairing is a well-defined injection per sort and all atomic facts on
/// paired elements agree.
fn partial_iso_ok(a: &Structure, b: &Structure, pairs: &[(usize, usize, usize)]) -> bool {
    let v = a.vocabulary();
    let mut per_sort: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v.sorts.len()];
    for (id, decl) in v.constants.iter().enumerate() {
        per_sort[decl.sort].push((a.constant(id), b.constant(id)));
    }
    for &(s, ea, eb) in pairs {
        per_sort[s].push((ea, eb));
    }
    for list in &per_sort {
        for (i, &(xa, xb)) in list.iter().enumerate() {
            for &(ya, yb) in &list[i + 1..] {
                if (xa == ya) != (xb == yb) {
                    return false;
                }
            }
        }
    }
    for (id, decl) in v.relations.iter().enumerate() {
        let mut idx = vec![0usize; decl.args.len()];
        loop {
            let mut ta = Vec::with_capacity(idx.len());
            let mut tb = Vec::with_capacity(idx.len());
            let mut ok = true;
            for (slot, &arg_sort) in decl.args.iter().enumerate() {
                match per_sort[arg_sort].get(idx[slot]) {
                    Some(&(ea, eb)) => {
                        ta.push(ea);
                        tb.push(eb);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && a.rel(id).holds(&ta) != b.rel(id).holds(&tb) {
                return false;
            }
            // odometer over paired elements per slot
            let mut k = decl.args.len();
            let mut done = k == 0;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < per_sort[decl.args[k]].len() {
                    break;
                }
                idx[k] = 0;
            }
            if done || decl.args.iter().any(|&s| per_sort[s].is_empty()) {
                break;
            }
        }
    }
    true
}

fn duplicator_wins(
    a: &Structure,
    b: &Structure,
    k: u32,
    pairs: &mut Vec<(usize, usize, usize)>,
) -> bool {
    if !partial_iso_ok(a, b, pairs) {
        return false;
    }
    if k == 0 {
        return true;
    }
    for s in 0..a.vocabulary().sorts.len() {
        // Spoiler plays in A; Duplicator must answer in B
        for ea in 0..a.sort_size(s) {
            let mut answered = false;
            for eb in 0..b.sort_size(s) {
                pairs.push((s, ea, eb));
                let win = duplicator_wins(a, b, k - 1, pairs);
                pairs.pop();
                if win {
                    answered = true;
                    break;
                }
            }
            if !answered {
                return false;
            }
        }
        // Spoiler plays in B
        for eb in 0..b.sort_size(s) {
            let mut answered = false;
            for ea in 0..a.sort_size(s) {
                pairs.push((s, ea, eb));
                let win = duplicator_wins(a, b, k - 1, pairs);
                pairs.pop();
                if win {
                    answered = true;
                    break;
                }
            }
            if !answered {
                return false;
            }
        }
    }
    true
}
