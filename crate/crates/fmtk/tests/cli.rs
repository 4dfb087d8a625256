//! End-to-end tests of the command-line interface: exit codes, report
//! round-trips, and byte-level determinism of machine output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fmtk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmtk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_temp(name: &str, content: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("fmtk-test-{}-{name}", std::process::id()));
    std::fs::write(&path, content).unwrap();
    path
}

fn chain() -> PathBuf {
    write_temp(
        "chain.fmtk",
        "sort s = a b c\nrel E(s, s) = (a, b) (b, c)\n",
    )
}

#[test]
fn eval_exit_codes_track_truth() {
    let s = chain();
    let s = s.to_str().unwrap();
    let ok = fmtk(&["eval", "--structure", s, "--formula", "WF x y (E(x, y))"]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "true");

    let no = fmtk(&[
        "eval",
        "--structure",
        s,
        "--formula",
        "exists x:s . E(x, x)",
    ]);
    assert_eq!(no.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&no.stdout).trim(), "false");

    let json = fmtk(&[
        "--output",
        "json",
        "eval",
        "--structure",
        s,
        "--formula",
        "WF x y (E(x, y))",
    ]);
    let report: fmtk::cli::EvalReport = serde_json::from_slice(&json.stdout).unwrap();
    assert!(report.value);
}

#[test]
fn eval_with_assignments_and_free_variables() {
    let s = chain();
    let s = s.to_str().unwrap();
    let out = fmtk(&[
        "eval",
        "--structure",
        s,
        "--formula",
        "E(x, y)",
        "--assign",
        "x=a",
        "--assign",
        "y=b",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let missing = fmtk(&["eval", "--structure", s, "--formula", "E(x, y)"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn ill_sorted_formula_is_a_usage_error() {
    let s = chain();
    let out = fmtk(&[
        "eval",
        "--structure",
        s.to_str().unwrap(),
        "--formula",
        "E(x)",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sort error"), "stderr: {err}");
    assert!(err.contains("byte"), "position reported: {err}");
}

#[test]
fn verify_pass_and_report_shape() {
    let out = fmtk(&["verify", "Q_EMPTY", "--max-size", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("checked 66067, pass"), "{text}");

    let json = fmtk(&["--output", "json", "verify", "Q_EMPTY", "--max-size", "3"]);
    assert_eq!(json.status.code(), Some(0));
    let report: fmtk::constructions::VerifyReport =
        serde_json::from_slice(&json.stdout).expect("report re-parses");
    assert!(report.passed());
    assert_eq!(report.checked, 531);
}

#[test]
fn verify_unknown_name_is_usage_error() {
    let out = fmtk(&["verify", "NOPE"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_lists_registry() {
    let out = fmtk(&["--output", "json", "catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let entries: Vec<fmtk::constructions::CatalogEntry> =
        serde_json::from_slice(&out.stdout).unwrap();
    assert!(entries.len() >= 10);
    assert!(entries.iter().any(|e| e.name == "Q_EMPTY"));
    assert!(entries.iter().all(|e| !e.origin.is_empty()));
}

#[test]
fn collapse_reports_mapping_or_failure() {
    let s = chain();
    let out = fmtk(&[
        "--output",
        "json",
        "collapse",
        "--structure",
        s.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: fmtk::cli::CollapseReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.mapping[0], ("a".to_string(), "{}".to_string()));

    let cyc = write_temp("cycle.fmtk", "sort s = a b\nrel E(s, s) = (a, b) (b, a)\n");
    let out = fmtk(&["collapse", "--structure", cyc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not well-founded"));
}

#[test]
fn probe_ulst_and_its_preconditions() {
    let s = chain();
    let s = s.to_str().unwrap();
    let out = fmtk(&[
        "--output",
        "json",
        "probe-ulst",
        "--structure",
        s,
        "--formula",
        "WF x y (E(x, y))",
        "--target",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: fmtk::cli::ProbeReport = serde_json::from_slice(&out.stdout).unwrap();
    let witness = report.witness.expect("a 4-element acyclic extension");
    let parsed = fmtk::textio::parse_structure(&witness).unwrap();
    assert_eq!(parsed.total_size(), 4);

    let too_small = fmtk(&[
        "probe-ulst",
        "--structure",
        s,
        "--formula",
        "true",
        "--target",
        "2",
    ]);
    assert_eq!(too_small.status.code(), Some(2), "target below |A|");

    let unsat = fmtk(&[
        "probe-ulst",
        "--structure",
        s,
        "--formula",
        "exists x:s . E(x, x)",
        "--target",
        "4",
    ]);
    assert_eq!(
        unsat.status.code(),
        Some(2),
        "base does not satisfy the sentence"
    );
}

#[test]
fn search_and_project() {
    let vocab = write_temp("vocab.fmtk", "sort s\nrel E(s, s)\n");
    let out = fmtk(&[
        "--output",
        "json",
        "search",
        "--vocab",
        vocab.to_str().unwrap(),
        "--formula",
        "forall x:s . forall y:s . x = y",
        "--max-size",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: fmtk::cli::SearchReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.count, 3, "size 0 plus two structures at size 1");
    for m in &report.models {
        fmtk::textio::parse_structure(m).expect("models round-trip");
    }

    let none = fmtk(&[
        "search",
        "--vocab",
        vocab.to_str().unwrap(),
        "--formula",
        "exists x:s . x != x",
        "--max-size",
        "2",
    ]);
    assert_eq!(none.status.code(), Some(1));

    let spec = write_temp(
        "spec.fmtk",
        "base:\n sort a\n sort b\nextended:\n sort a\n sort b\n rel E(a, b)\n\
         formula: forall u:b . forall v:b . ((forall x:a . (E(x, u) <-> E(x, v))) -> u = v)\n\
         bound: id\n",
    );
    let bare12 = write_temp("bare12.fmtk", "sort a = a0\nsort b = b0 b1\n");
    let out = fmtk(&[
        "--output",
        "json",
        "project",
        "--spec",
        spec.to_str().unwrap(),
        "--structure",
        bare12.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: fmtk::cli::ProjectReport = serde_json::from_slice(&out.stdout).unwrap();
    let witness = fmtk::textio::parse_structure(&report.witness.unwrap()).unwrap();
    assert_eq!(witness.total_size(), 3);

    let bare13 = write_temp("bare13.fmtk", "sort a = a0\nsort b = b0 b1 b2\n");
    let out = fmtk(&[
        "project",
        "--spec",
        spec.to_str().unwrap(),
        "--structure",
        bare13.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "3 > 2^1: no witness");
}

#[test]
fn machine_output_is_byte_identical_across_runs_and_workers() {
    let runs: Vec<Vec<u8>> = [1, 2, 2]
        .iter()
        .map(|&w| {
            let out = fmtk(&[
                "--output",
                "json",
                "--workers",
                &w.to_string(),
                "verify",
                "LINDSTROM_WF",
                "--max-size",
                "3",
            ]);
            assert_eq!(out.status.code(), Some(0));
            out.stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1], "workers 1 vs 2");
    assert_eq!(runs[1], runs[2], "repeated run");
}
