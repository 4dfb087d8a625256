//! Acceptance suite: every headline property of the workbench, checked
//! exhaustively at its stated scale against an independent route, with one
//! pass/fail line per criterion and a wall-clock budget each.
//!
//! Run with `cargo test --test acceptance` (the whole suite is also part of
//! `cargo test --workspace`).

use fmtk::constructions::{encode, oracles, texts, verify, RunOpts};
use fmtk::formula::parse;
use fmtk::hf::{
    eval_set_formula, is_r_correct, random_formulas, transitive_submodels, v_level, HfCaps,
    RPredicate, SetFormula, TransitiveModel,
};
use fmtk::logic::{qr_equivalent, Structure, StructureEnumerator};
use fmtk::semantics::{eval, Assignment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

fn budgeted<T>(criterion: &str, budget: Duration, run: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    println!("criterion {criterion}: PASS in {elapsed:.2?} (budget {budget:.0?})");
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its budget: {elapsed:.2?} > {budget:.0?}"
    );
    out
}

fn mask_edges(n: usize, mask: u64) -> Vec<(usize, usize)> {
    (0..n * n)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| (i / n, i % n))
        .collect()
}

/// 1. The Härtig evaluator agrees with direct counting on the half-split
///    sentence for all {P}-structures with |A| ≤ 6, exhaustively up to
///    isomorphism.
#[test]
fn criterion_01_hartig_oracle_suite() {
    budgeted("1 (Härtig oracle suite)", Duration::from_secs(1), || {
        let report = verify("HARTIG_HALF", 6, &RunOpts::default()).unwrap();
        assert!(report.passed(), "{:?}", report.outcome);
        assert_eq!(report.checked, 28);
    });
}

/// 2. WF-quantifier evaluation, the minimal-element oracle, and acyclicity
///    agree for every binary relation on at most 4 atoms.
#[test]
fn criterion_02_wf_oracle_suite() {
    budgeted("2 (WF oracle suite)", Duration::from_secs(10), || {
        let vocab = encode::graph_vocab();
        let phi = parse("WF x y (E(x, y))", &vocab).unwrap();
        let alpha = Assignment::new();
        let mut checked = 0u64;
        for n in 0..=4usize {
            for mask in 0..(1u64 << (n * n)) {
                let edges = mask_edges(n, mask);
                let s = encode::graph_structure(n, &edges);
                let by_eval = eval(&phi, &s, &alpha).unwrap();
                let by_minimal = oracles::every_nonempty_subset_has_minimal(n, &edges);
                let by_acyclic = oracles::is_acyclic(n, &edges);
                assert_eq!(by_eval, by_minimal, "n={n} mask={mask}");
                assert_eq!(by_eval, by_acyclic, "n={n} mask={mask}");
                checked += 1;
            }
        }
        assert_eq!(checked, 66067);
    });
}

/// 3. Extensionality plus WF holds exactly when the Mostowski collapse
///    succeeds, over the same sweep.
#[test]
fn criterion_03_membership_model_equivalence() {
    budgeted(
        "3 (membership-model equivalence)",
        Duration::from_secs(30),
        || {
            let report = verify("Q_EMPTY", 4, &RunOpts::default()).unwrap();
            assert!(report.passed(), "{:?}", report.outcome);
            assert_eq!(report.checked, 66067);
        },
    );
}

/// 4. The well-foundedness Δ-pair: exactly one side has a witness, and the
///    stage side (within |A| stages) succeeds exactly for acyclic E.
#[test]
fn criterion_04_wf_delta_pair() {
    budgeted(
        "4 (well-foundedness Δ-pair)",
        Duration::from_secs(300),
        || {
            let report = verify("LINDSTROM_WF", 4, &RunOpts::default()).unwrap();
            assert!(report.passed(), "{:?}", report.outcome);
            assert_eq!(report.checked, 66067);
        },
    );
}

/// 5. 2^κ is definably bounding: expansions of the bare (a, b) pair exist
///    exactly when b ≤ 2^a, exhaustively for a ≤ 3, b ≤ 9.
#[test]
fn criterion_05_definably_bounding_exp2() {
    budgeted(
        "5 (definably bounding 2^κ)",
        Duration::from_secs(60),
        || {
            let report = verify("ALEPHBOUND", 3, &RunOpts::default()).unwrap();
            assert!(report.passed(), "{:?}", report.outcome);
            assert_eq!(report.checked, 27, "grid 1..=3 × 1..=9");
        },
    );
}

/// 6. Power-set correctness: the four-element carrier is flagged not
///    PwSt-correct, every transitive M inside V_3 is Cd-correct, and the
///    power-set membership claim holds for all (A, E) with |A| ≤ 4.
#[test]
fn criterion_06_pwst_correctness() {
    budgeted("6 (PwSt correctness)", Duration::from_secs(60), || {
        let caps = HfCaps::default();
        let witness =
            TransitiveModel::new((0..4).map(fmtk::hf::HfSet::von_neumann).collect()).unwrap();
        assert!(!is_r_correct(&witness, RPredicate::PwSt, &caps).unwrap());

        let v3 = v_level(3, &caps).unwrap();
        for m in transitive_submodels(v3.elements()) {
            assert!(
                is_r_correct(&m, RPredicate::Cd, &caps).unwrap(),
                "carrier {:?}",
                m.carrier()
            );
        }

        let report = verify("Q_PWST", 4, &RunOpts::default()).unwrap();
        assert!(report.passed(), "{:?}", report.outcome);
    });
}

/// 7. Absoluteness sweep: 1000 random Δ₀ formulas of depth ≤ 4 agree between
///    sampled transitive pairs M ⊆ N ⊆ V_4 (at least 100 pairs), and Σ₁
///    formulas never flip from true to false going up.
#[test]
fn criterion_07_absoluteness_sweep() {
    budgeted("7 (absoluteness sweep)", Duration::from_secs(120), || {
        let caps = HfCaps::default();
        let v4 = v_level(4, &caps).unwrap();
        let models = transitive_submodels(v4.elements());
        let nonempty: Vec<&TransitiveModel> = models.iter().filter(|m| m.card() > 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let mut pairs = Vec::new();
        while pairs.len() < 100 {
            let m = nonempty[rng.gen_range(0..nonempty.len())];
            let n = nonempty[rng.gen_range(0..nonempty.len())];
            let subset = m
                .carrier()
                .iter()
                .all(|x| n.carrier().binary_search(x).is_ok());
            if subset {
                pairs.push((m, n));
            }
        }
        let vars: Vec<String> = (0..2).map(|i| format!("p{i}")).collect();
        let mut delta0_checked = 0u64;
        for (m, n) in &pairs {
            for _ in 0..10 {
                let phi = random_formulas::random_delta0(&mut rng, 4, &vars);
                assert!(phi.is_delta0());
                let sigma = random_formulas::random_sigma1(&mut rng, 3, &vars);
                let mut asg: BTreeMap<String, fmtk::hf::HfSet> = BTreeMap::new();
                for v in &vars {
                    let idx = rng.gen_range(0..m.card());
                    asg.insert(v.clone(), m.carrier()[idx].clone());
                }
                let lo = eval_set_formula(&phi, m, &asg).unwrap();
                let hi = eval_set_formula(&phi, n, &asg).unwrap();
                assert_eq!(lo, hi, "Δ₀ absoluteness failed: {phi:?}");
                let s_lo = eval_set_formula(&sigma, m, &asg).unwrap();
                let s_hi = eval_set_formula(&sigma, n, &asg).unwrap();
                assert!(
                    !s_lo || s_hi,
                    "Σ₁ formula flipped true→false upward: {sigma:?}"
                );
                delta0_checked += 1;
            }
        }
        assert!(delta0_checked >= 1000);
    });
}

/// 8. The cardinality ladder: the literal clauses admit finite witnesses
///    exactly for E = ∅, while the finite analog (with at most |A| stages)
///    captures acyclicity, both for |A| ≤ 3.
#[test]
fn criterion_08_ladder_literal_vs_finite() {
    budgeted(
        "8 (ladder: literal vs finite)",
        Duration::from_secs(120),
        || {
            let report = verify("PHI_PAPER_FINITE", 3, &RunOpts::default()).unwrap();
            assert!(report.passed(), "{:?}", report.outcome);
            let report = verify("PHI_FIN", 3, &RunOpts::default()).unwrap();
            assert!(report.passed(), "{:?}", report.outcome);
        },
    );
}

/// 9. The assembly pieces: the rank-bounded search characterization agrees
///    with direct membership for |A| ≤ 4, and the assembled model around
///    each registered code satisfies its conditions, with the witness axioms
///    re-verified by evaluation.
#[test]
fn criterion_09_assembly_pieces() {
    budgeted("9 (assembly pieces)", Duration::from_secs(300), || {
        let report = verify("KPRIME_QR", 4, &RunOpts::default()).unwrap();
        assert!(report.passed(), "{:?}", report.outcome);
        let report = verify("KSTAR_PIECES", 3, &RunOpts::default()).unwrap();
        assert!(report.passed(), "{:?}", report.outcome);
    });
}

/// 10. Quantifier-rank tooling: game equivalence agrees with exhaustive
///     evaluation of the rank-2 sentence family over one binary relation for
///     sizes ≤ 3; linear orders of lengths 3 and 4 are rank-2 equivalent
///     while lengths 1 and 2 are not.
#[test]
fn criterion_10_ef_rank_tooling() {
    budgeted("10 (EF-rank tooling)", Duration::from_secs(60), || {
        let vocab = encode::graph_vocab();
        // every rank-2 sentence over {E} is a boolean combination of the
        // sentences "some x has self-loop sign m and realizes exactly the
        // 2-type set S", so agreement on that family decides rank-2
        // equivalence
        let mut sentences = Vec::new();
        let type_text = |t: usize| {
            let lit = |b: bool, s: String| if b { s } else { format!("!{s}") };
            format!(
                "({} & {} & {})",
                lit(t & 1 != 0, "E(x, y)".to_string()),
                lit(t & 2 != 0, "E(y, x)".to_string()),
                lit(t & 4 != 0, "E(y, y)".to_string())
            )
        };
        for m_pos in [true, false] {
            for s_mask in 0u32..256 {
                let m_text = if m_pos { "E(x, x)" } else { "!E(x, x)" };
                let mut parts = vec![m_text.to_string()];
                for t in 0..8 {
                    if s_mask & (1 << t) != 0 {
                        parts.push(format!("(exists y:s . (y != x & {}))", type_text(t)));
                    }
                }
                let disj = (0..8)
                    .filter(|t| s_mask & (1 << t) != 0)
                    .map(type_text)
                    .collect::<Vec<_>>()
                    .join(" | ");
                let closure = if disj.is_empty() {
                    "(forall y:s . (y != x -> false))".to_string()
                } else {
                    format!("(forall y:s . (y != x -> ({disj})))")
                };
                parts.push(closure);
                let text = format!("exists x:s . ({})", parts.join(" & "));
                sentences.push(parse(&text, &vocab).unwrap());
            }
        }
        assert_eq!(sentences.len(), 512);

        let alpha = Assignment::new();
        let mut structures: Vec<(Structure, Vec<bool>)> = Vec::new();
        for n in 0..=3usize {
            for s in StructureEnumerator::new(vocab.clone(), &[n], false) {
                let sig: Vec<bool> = sentences
                    .iter()
                    .map(|phi| eval(phi, &s, &alpha).unwrap())
                    .collect();
                structures.push((s, sig));
            }
        }
        // rank 1 is decided by the two loop-existence sentences, rank 0 by
        // nothing at all (the vocabulary has no constants)
        let rank1: Vec<_> = ["exists x:s . E(x, x)", "exists x:s . !E(x, x)"]
            .iter()
            .map(|t| parse(t, &vocab).unwrap())
            .collect();
        let mut agreements = 0u64;
        for (a, sig_a) in &structures {
            for (b, sig_b) in &structures {
                let by_sentences = sig_a == sig_b;
                let by_game = qr_equivalent(a, b, 2).unwrap();
                assert_eq!(by_game, by_sentences, "rank-2 disagreement:\n{a}\nvs\n{b}");
                if by_game {
                    agreements += 1;
                }
                assert!(qr_equivalent(a, b, 0).unwrap());
                let by_rank1 = rank1
                    .iter()
                    .all(|s| eval(s, a, &alpha).unwrap() == eval(s, b, &alpha).unwrap());
                assert_eq!(qr_equivalent(a, b, 1).unwrap(), by_rank1);
            }
        }
        assert!(agreements > structures.len() as u64, "sanity");

        let order = |n: usize| {
            let mut s = Structure::new_with_sizes(vocab.clone(), &[n]).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    s.rel_mut(0).set(&[i, j], true);
                }
            }
            s
        };
        assert!(qr_equivalent(&order(3), &order(4), 2).unwrap());
        assert!(!qr_equivalent(&order(1), &order(2), 2).unwrap());
    });
}

/// 11. Determinism: machine reports are byte-identical at worker counts
///     1 and N.
#[test]
fn criterion_11_determinism_across_worker_counts() {
    budgeted(
        "11 (worker-count determinism)",
        Duration::from_secs(120),
        || {
            let single = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            let many = rayon::ThreadPoolBuilder::new()
                .num_threads(4)
                .build()
                .unwrap();
            for (name, scale) in [
                ("Q_EMPTY", 3),
                ("LINDSTROM_WF", 3),
                ("ALEPHBOUND", 3),
                ("Q_PWST", 3),
                ("PHI_FIN", 2),
            ] {
                let opts = RunOpts::default();
                let a = single.install(|| verify(name, scale, &opts).unwrap());
                let b = many.install(|| verify(name, scale, &opts).unwrap());
                let ja = serde_json::to_vec(&a).unwrap();
                let jb = serde_json::to_vec(&b).unwrap();
                assert_eq!(ja, jb, "{name} reports differ across worker counts");
            }
        },
    );
}

/// The shipped ∈-formulas stay Π₁-shaped: bounded except for the leading
/// unbounded universal quantifiers.
#[test]
fn shipped_formulas_have_the_documented_shape() {
    fn strip_universals(phi: &SetFormula) -> &SetFormula {
        match phi {
            SetFormula::Forall(_, body) => strip_universals(body),
            other => other,
        }
    }
    let cd = fmtk::hf::cd_formula();
    assert!(
        !cd.is_delta0(),
        "the cardinal predicate quantifies over maps"
    );
    let pwst = fmtk::hf::pwst_formula();
    assert!(!pwst.is_delta0());
    let _ = strip_universals(&pwst);
    let lits = [texts::ext_text(), texts::wf_text()];
    assert!(lits.iter().all(|t| !t.is_empty()));
}
