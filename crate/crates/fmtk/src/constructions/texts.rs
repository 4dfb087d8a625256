//! The fixed sentences and projection specs the registry verifies.
//!
//! Everything is written in the concrete grammar (or assembled from the
//! shipped ∈-formulas through the membership translation), so these
//! definitions double as worked examples of the formula language.

use super::encode::graph_vocab;
use crate::formula::{parse, set_formula_to_fo, Formula, Term};
use crate::hf::{cd_formula, pwst_formula};
use crate::logic::Vocabulary;
use crate::projection::{Bound, BoundingFunction, ProjectionSpec};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Extensionality over a membership relation: distinct elements have
/// distinct E-extensions.
pub fn ext_text() -> &'static str {
    "forall x:s . forall y:s . ((forall z:s . (E(z, x) <-> E(z, y))) -> x = y)"
}

pub fn wf_text() -> &'static str {
    "WF x y (E(x, y))"
}

/// The half-split sentence: as many P's as non-P's.
pub fn hartig_half_sentence() -> Formula {
    let vocab = Vocabulary::builder()
        .sort("s")
        .relation("P", &["s"])
        .build()
        .expect("unary vocabulary");
    parse("I x y (P(x)) (!P(y))", &vocab).expect("half-split sentence")
}

pub fn unary_vocab() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::builder()
            .sort("s")
            .relation("P", &["s"])
            .build()
            .expect("unary vocabulary"),
    )
}

/// Membership-model axiom: extensional and well-founded.
pub fn q_empty_sentence() -> Formula {
    let v = graph_vocab();
    parse(&format!("({}) & ({})", ext_text(), wf_text()), &v).expect("membership axiom")
}

/// The internal cardinality soundness sentence: whatever the model takes for
/// a cardinal (via the shipped ∈-formula, read along E) has an extension of
/// strictly larger cardinality than each of its members' extensions.
pub fn cd_soundness_sentence() -> Formula {
    let mut free = BTreeMap::new();
    free.insert("x".to_string(), Term::Var("al".to_string()));
    let cd_internal = set_formula_to_fo(&cd_formula(), 0, 0, &free);
    let hartig_clause = Formula::Not(Box::new(Formula::Hartig {
        left_var: "hy".into(),
        left_sort: 0,
        right_var: "hz".into(),
        right_sort: 0,
        left: Box::new(Formula::Rel(
            0,
            vec![Term::Var("hy".into()), Term::Var("hx".into())],
        )),
        right: Box::new(Formula::Rel(
            0,
            vec![Term::Var("hz".into()), Term::Var("al".into())],
        )),
    }));
    let inner = Formula::Forall {
        var: "hx".into(),
        sort: 0,
        body: Box::new(Formula::Implies(
            Box::new(Formula::Rel(
                0,
                vec![Term::Var("hx".into()), Term::Var("al".into())],
            )),
            Box::new(hartig_clause),
        )),
    };
    Formula::Forall {
        var: "al".into(),
        sort: 0,
        body: Box::new(Formula::Implies(Box::new(cd_internal), Box::new(inner))),
    }
}

/// The full membership-with-sound-cardinals sentence.
pub fn q_cd_sentence() -> Formula {
    Formula::And(
        Box::new(q_empty_sentence()),
        Box::new(cd_soundness_sentence()),
    )
}

/// The second-order power-set description Φ(x, y): every subclass of x's
/// extension is the extension of some member of y, and every member of y is
/// included in x. Over a transitive membership model this pins y to the true
/// power set of x.
pub fn pwst_so_text() -> &'static str {
    "(forall2 Z:(s) . ((forall w:s . (Z(w) -> E(w, x))) -> \
        exists v:s . (E(v, y) & (forall w:s . (E(w, v) <-> Z(w)))))) \
     & (forall v:s . (E(v, y) -> (forall w:s . (E(w, v) -> E(w, x)))))"
}

pub fn pwst_so_formula() -> Formula {
    parse(pwst_so_text(), &graph_vocab()).expect("second-order power-set description")
}

/// The internal power-set ∈-formula read along E, with free x, y.
pub fn pwst_internal_formula() -> Formula {
    let mut free = BTreeMap::new();
    free.insert("x".to_string(), Term::Var("x".to_string()));
    free.insert("y".to_string(), Term::Var("y".to_string()));
    set_formula_to_fo(&pwst_formula(), 0, 0, &free)
}

/// Membership-model axiom plus: the internal power-set formula agrees with
/// the second-order description everywhere.
pub fn q_pwst_sentence() -> Formula {
    let equiv = Formula::Forall {
        var: "x".into(),
        sort: 0,
        body: Box::new(Formula::Forall {
            var: "y".into(),
            sort: 0,
            body: Box::new(Formula::Iff(
                Box::new(pwst_internal_formula()),
                Box::new(pwst_so_formula()),
            )),
        }),
    };
    Formula::And(Box::new(q_empty_sentence()), Box::new(equiv))
}

/// Σ-side of the well-foundedness pair: a second sort of stages and a
/// staircase relation R, with strictly growing stage sets along E
/// (inclusion plus the equicardinality quantifier). Witness stages fit in
/// |A| atoms, so the bound table is n ↦ 2n.
pub fn lindstrom_sigma_spec(max_base: usize) -> ProjectionSpec {
    let base = graph_vocab();
    let ext = Arc::new(
        Vocabulary::builder()
            .sort("s")
            .sort("x")
            .relation("E", &["s", "s"])
            .relation("R", &["s", "x"])
            .build()
            .expect("staircase vocabulary"),
    );
    let phi = parse(
        "forall u:s . forall v:s . (E(u, v) -> \
           ((forall w:x . (R(u, w) -> R(v, w))) & !I p q (R(u, p))(R(v, q))))",
        &ext,
    )
    .expect("staircase sentence");
    let table: Vec<(u64, u64)> = (0..=max_base as u64).map(|n| (n, 2 * n)).collect();
    ProjectionSpec::new(base, ext, phi, Bound::Table(table)).expect("staircase spec")
}

/// Π-side: a nonempty P with no E-least element.
pub fn lindstrom_pi_spec() -> ProjectionSpec {
    let base = graph_vocab();
    let ext = Arc::new(
        Vocabulary::builder()
            .sort("s")
            .relation("E", &["s", "s"])
            .relation("P", &["s"])
            .build()
            .expect("descent vocabulary"),
    );
    let phi = parse(
        "(exists x:s . P(x)) & (forall x:s . (P(x) -> exists y:s . (P(y) & E(y, x))))",
        &ext,
    )
    .expect("descent sentence");
    ProjectionSpec::new(base, ext, phi, Bound::Func(BoundingFunction::Id)).expect("descent spec")
}

/// Two bare sorts extended by an extensional relation from the first into
/// the second: witnesses exist exactly when |b| ≤ 2^|a|.
pub fn alephbound_spec() -> ProjectionSpec {
    let base = crate::projection::bare_pair_vocabulary();
    let ext = Arc::new(
        Vocabulary::builder()
            .sort("a")
            .sort("b")
            .relation("E", &["a", "b"])
            .build()
            .expect("subset-coding vocabulary"),
    );
    let phi = parse(
        "forall u:b . forall v:b . ((forall x:a . (E(x, u) <-> E(x, v))) -> u = v)",
        &ext,
    )
    .expect("subset-coding sentence");
    ProjectionSpec::new(base, ext, phi, Bound::Func(BoundingFunction::Id))
        .expect("subset-coding spec")
}

/// Two bare sorts extended by a surjection from the first onto the second:
/// witnesses exist exactly when |b| ≤ |a| (at positive sizes).
pub fn surjection_spec() -> ProjectionSpec {
    let base = crate::projection::bare_pair_vocabulary();
    let ext = Arc::new(
        Vocabulary::builder()
            .sort("a")
            .sort("b")
            .function("f", &["a"], "b")
            .build()
            .expect("surjection vocabulary"),
    );
    let phi = parse("forall y:b . exists x:a . f(x) = y", &ext).expect("surjection sentence");
    ProjectionSpec::new(base, ext, phi, Bound::Func(BoundingFunction::Id)).expect("surjection spec")
}

/// Vocabulary for the cardinality-ladder sentences: the carrier sort `s`
/// with E, a stage sort `t` with a strict order LT, and f from s to t.
pub fn ladder_vocab() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::builder()
            .sort("s")
            .sort("t")
            .relation("E", &["s", "s"])
            .relation("LT", &["t", "t"])
            .function("f", &["s"], "t")
            .build()
            .expect("ladder vocabulary"),
    )
}

/// "t has an infinite strict past": every strict predecessor can be dropped
/// without changing the cardinality of the past. On finite orders this holds
/// only for minimal elements (an empty past, vacuously).
fn inf_text(t: &str) -> String {
    format!("(forall ifx:t . (LT(ifx, {t}) -> I ify ifz ((LT(ify, {t}) & ify != ifx)) ((LT(ifz, {t})))))")
}

/// "t is cardinal-like": no strict predecessor has an equinumerous past.
fn like_text(t: &str) -> String {
    format!("(forall lkb:t . (LT(lkb, {t}) -> !I lky lkz ((LT(lky, {t}))) ((LT(lkz, lkb)))))")
}

fn ladder_clause(n: usize) -> String {
    match n {
        // LT is a strict linear order
        1 => "(forall o1:t . !LT(o1, o1)) \
              & (forall o1:t . forall o2:t . forall o3:t . ((LT(o1, o2) & LT(o2, o3)) -> LT(o1, o3))) \
              & (forall o1:t . forall o2:t . (o1 != o2 -> (LT(o1, o2) | LT(o2, o1))))"
            .to_string(),
        // the whole stage sort is cardinal-like
        2 => "forall b2:t . !I iix:t iiy:t ((LT(iix, b2))) ((iiy = iiy))".to_string(),
        // no infinite cardinal is skipped below an infinite stage
        3 => format!(
            "forall b3:t . ({} -> exists bp:t . ((LT(bp, b3) | bp = b3) \
               & I c1 c2 ((LT(c1, b3))) ((LT(c2, bp))) & {}))",
            inf_text("b3"),
            like_text("bp")
        ),
        // f is order-preserving along E
        4 => "forall a1:s . forall a2:s . (E(a1, a2) -> LT(f(a1), f(a2)))".to_string(),
        // every stage in the range of f is infinite and cardinal-like
        5 => format!(
            "forall a3:s . ({} & {})",
            inf_text("f(a3)"),
            like_text("f(a3)")
        ),
        // stages below f(a) are dominated by stages of E-predecessors
        6 => "forall a4:s . forall b4:t . (LT(b4, f(a4)) -> \
              exists a5:s . (E(a5, a4) & (LT(b4, f(a5)) | b4 = f(a5))))"
            .to_string(),
        // the range of f is cofinal in the stages
        7 => "forall b5:t . exists a6:s . (LT(b5, f(a6)) | b5 = f(a6))".to_string(),
        _ => unreachable!(),
    }
}

/// The full cardinality-ladder sentence (clauses 1-7). Written for infinite
/// cardinal arithmetic; finitely it forces every f-value onto the minimal
/// stage, so finite witnesses exist only for E = ∅.
pub fn ladder_sentence_full() -> Formula {
    let text = (1..=7)
        .map(|n| format!("({})", ladder_clause(n)))
        .collect::<Vec<_>>()
        .join(" & ");
    parse(&text, &ladder_vocab()).expect("full ladder sentence")
}

/// The finite analog: clauses 1, 4, 6 and 7 only (strict increase along E is
/// already forced by clause 4 over a strict order). Witnesses with at most
/// |A| stages exist exactly for acyclic E, via the rank function.
pub fn ladder_sentence_finite() -> Formula {
    let text = [1, 4, 6, 7]
        .iter()
        .map(|&n| format!("({})", ladder_clause(n)))
        .collect::<Vec<_>>()
        .join(" & ");
    parse(&text, &ladder_vocab()).expect("finite ladder sentence")
}
