//! Encodings between membership graphs, finite structures, and hereditarily
//! finite sets.

use crate::hf::{HfSet, TransitiveModel};
use crate::logic::{Structure, Vocabulary};
use std::sync::Arc;

/// One sort `s` with a binary relation `E`.
pub fn graph_vocab() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::builder()
            .sort("s")
            .relation("E", &["s", "s"])
            .build()
            .expect("graph vocabulary"),
    )
}

/// One sort `s` with a binary relation `E` and a constant `c`.
pub fn membership_vocab() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::builder()
            .sort("s")
            .relation("E", &["s", "s"])
            .constant("c", "s")
            .build()
            .expect("membership vocabulary"),
    )
}

/// Builds the graph structure with the given edges; `(a, b)` means `a E b`.
pub fn graph_structure(n: usize, edges: &[(usize, usize)]) -> Structure {
    let mut s = Structure::new_with_sizes(graph_vocab(), &[n]).expect("graph structure");
    for &(a, b) in edges {
        s.rel_mut(0).set(&[a, b], true);
    }
    s
}

/// The edge list of a one-sorted binary relation.
pub fn edges_of(s: &Structure, rel: usize) -> Vec<(usize, usize)> {
    s.rel(rel)
        .tuples()
        .into_iter()
        .map(|t| (t[0], t[1]))
        .collect()
}

/// A transitive model as a membership structure: atoms are the carrier
/// elements in canonical order, E is real membership, and the constant
/// denotes `c` (which must be in the carrier).
pub fn transitive_model_structure(m: &TransitiveModel, c: &HfSet) -> Structure {
    let carrier = m.carrier();
    let names: Vec<String> = (0..carrier.len()).map(|i| format!("m{i}")).collect();
    let mut s = Structure::new(membership_vocab(), vec![names]).expect("carrier structure");
    for (i, x) in carrier.iter().enumerate() {
        for (j, y) in carrier.iter().enumerate() {
            if y.contains(x) {
                s.rel_mut(0).set(&[i, j], true);
            }
        }
    }
    s.set_constant(0, m.index_of(c).expect("constant in carrier"));
    s
}

/// Same as [`transitive_model_structure`] but without a constant.
pub fn transitive_model_graph(m: &TransitiveModel) -> Structure {
    let carrier = m.carrier();
    let names: Vec<String> = (0..carrier.len()).map(|i| format!("m{i}")).collect();
    let mut s = Structure::new(graph_vocab(), vec![names]).expect("carrier structure");
    for (i, x) in carrier.iter().enumerate() {
        for (j, y) in carrier.iter().enumerate() {
            if y.contains(x) {
                s.rel_mut(0).set(&[i, j], true);
            }
        }
    }
    s
}

/// The canonical set code of a binary structure: the Kuratowski pair
/// ⟨{0, ..., n-1}, {⟨i, j⟩ : i E j}⟩ with atoms as von Neumann naturals.
pub fn graph_code(n: usize, edges: &[(usize, usize)]) -> HfSet {
    let domain = HfSet::von_neumann(n);
    let pairs: Vec<HfSet> = edges
        .iter()
        .map(|&(i, j)| HfSet::kuratowski(HfSet::von_neumann(i), HfSet::von_neumann(j)))
        .collect();
    HfSet::kuratowski(domain, HfSet::from_vec(pairs))
}

/// The set code of an atom map: {⟨i, f(i)⟩ : i < n} with atoms as von
/// Neumann naturals.
pub fn map_code(images: &[HfSet]) -> HfSet {
    let pairs: Vec<HfSet> = images
        .iter()
        .enumerate()
        .map(|(i, img)| HfSet::kuratowski(HfSet::von_neumann(i), img.clone()))
        .collect();
    HfSet::from_vec(pairs)
}
