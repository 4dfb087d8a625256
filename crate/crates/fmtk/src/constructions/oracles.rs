//! Independent oracles for the registry claims.
//!
//! Everything here is deliberately implemented without the extended-logic
//! evaluator: only direct combinatorics over edge lists and hereditarily
//! finite sets. The module must keep compiling if the evaluator is removed.

use crate::hf::{mostowski_collapse, HfError, HfSet};

/// Acyclicity by Kahn's algorithm (repeatedly removing sources). This is the
/// finite reading of well-foundedness.
pub fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
        indegree[b] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut removed = 0usize;
    while let Some(v) = queue.pop() {
        removed += 1;
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push(w);
            }
        }
    }
    removed == n
}

/// The subset reading of well-foundedness: every nonempty subset has an
/// element with no predecessor inside the subset. Exponential sweep.
pub fn every_nonempty_subset_has_minimal(n: usize, edges: &[(usize, usize)]) -> bool {
    assert!(n <= 20, "subset sweep over {n} atoms");
    let mut pred_mask = vec![0u32; n];
    for &(a, b) in edges {
        pred_mask[b] |= 1 << a;
    }
    for subset in 1u32..(1u32 << n) {
        let has_min = (0..n).any(|m| subset & (1 << m) != 0 && pred_mask[m] & subset == 0);
        if !has_min {
            return false;
        }
    }
    true
}

/// Whether exactly as many atoms satisfy the flag as do not.
pub fn equal_split(flags: &[bool]) -> bool {
    let yes = flags.iter().filter(|&&b| b).count();
    yes == flags.len() - yes
}

/// The Mostowski collapse attempt as a membership oracle: the graph is
/// isomorphic to a transitive ∈-model iff the collapse succeeds.
pub fn collapse(n: usize, edges: &[(usize, usize)]) -> Result<Vec<HfSet>, HfError> {
    mostowski_collapse(n, edges)
}

/// The rank of each atom in an acyclic graph: one more than the maximum rank
/// of its E-predecessors (0 for sources). Returns None on a cycle.
pub fn ranks(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if !is_acyclic(n, edges) {
        return None;
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        preds[b].push(a);
    }
    let mut rank = vec![usize::MAX; n];
    fn compute(v: usize, preds: &[Vec<usize>], rank: &mut Vec<usize>) -> usize {
        if rank[v] != usize::MAX {
            return rank[v];
        }
        let r = preds[v]
            .iter()
            .map(|&p| compute(p, preds, rank) + 1)
            .max()
            .unwrap_or(0);
        rank[v] = r;
        r
    }
    for v in 0..n {
        compute(v, &preds, &mut rank);
    }
    Some(rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acyclicity_routes_agree() {
        for n in 0..=3usize {
            for mask in 0u32..(1 << (n * n)) {
                let edges: Vec<(usize, usize)> = (0..n * n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| (i / n.max(1), i % n.max(1)))
                    .collect();
                assert_eq!(
                    is_acyclic(n, &edges),
                    every_nonempty_subset_has_minimal(n, &edges),
                    "n={n} mask={mask}"
                );
            }
        }
    }

    #[test]
    fn rank_is_monotone_along_edges() {
        let edges = [(0, 1), (1, 2), (0, 3), (3, 2)];
        let r = ranks(4, &edges).unwrap();
        for &(a, b) in &edges {
            assert!(r[a] < r[b]);
        }
        assert!(ranks(2, &[(0, 1), (1, 0)]).is_none());
    }
}
