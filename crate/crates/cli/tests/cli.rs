use std::path::{Path, PathBuf};

use bestow_cli::{run_args, EXIT_CHECK_FAILED, EXIT_DIAGNOSTICS, EXIT_OK};

fn program(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("programs").join(name).display().to_string()
}

fn bestow(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("bestow").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_prints_the_type() {
    let (code, out, _) = bestow(&["check", &program("ping.bst")]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "Unit\n"));
}

#[test]
fn check_reports_the_failing_rule() {
    let (code, _, err) = bestow(&["check", &program("ill-typed.bst")]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("[e-send]"), "{err}");
}

#[test]
fn check_of_a_heap_reports_wf_rules() {
    let (code, _, err) = bestow(&["check", &program("wrong-bestower.heap")]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("[wf-actor]"), "{err}");
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("bad.bst");
    std::fs::write(&path, "val a = new c\na ! \\x:p. { x.mutate()\n").unwrap();
    let (code, _, err) = bestow(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("bad.bst:2:"), "{err}");
}

#[test]
fn core_terms_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.core");
    std::fs::write(&path, "(bestow (new p))").unwrap();
    let (code, out, _) = bestow(&["check", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "B(p)\n"));
    let (code, out, _) = bestow(&["desugar", "--format", "core", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "(bestow (new p))\n"));
}

#[test]
fn run_reaches_a_terminal_heap() {
    let (code, out, _) = bestow(&["run", "--seed", "7", &program("iterator.bst")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("terminal: true"), "{out}");
}

#[test]
fn run_out_of_fuel_is_a_check_failure() {
    let (code, _, err) = bestow(&["run", "--fuel", "3", &program("iterator.bst")]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(err.contains("fuel exhausted"), "{err}");
}

#[test]
fn run_refuses_ill_typed_programs() {
    let (code, _, _) = bestow(&["run", &program("ill-typed.bst")]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
}

#[test]
fn explore_passes_and_emits_the_space() {
    let dir = tempfile::tempdir().unwrap();
    let emit = dir.path().join("space.json");
    let (code, out, _) = bestow(&["explore", &program("adjacent-batched.bst"), "--emit", emit.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}");
    for line in ["truncated: false", "progress: ok", "preservation: ok", "races: ok"] {
        assert!(out.contains(line), "{out}");
    }
    let dump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(emit).unwrap()).unwrap();
    assert!(dump.is_object());
}

#[test]
fn explore_finds_the_race() {
    let (code, out, _) = bestow(&["explore", "--check", "races", &program("racy.heap")]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("races: FAILED"), "{out}");
    assert!(!out.contains("progress:"), "{out}");
}

#[test]
fn desugar_shows_the_batch_as_one_message() {
    let (code, out, _) = bestow(&["desugar", &program("adjacent-batched.bst")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("(send list (fn this p"), "{out}");
}

#[test]
fn list_iterator_report() {
    let (code, out, _) = bestow(&["examples", "list-iterator", "--clients", "2", "--elements", "20", "--mode", "get"]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["hops"], 2 * (20 * 19 / 2 + 20));
    assert!(report["owner_trace"].as_array().unwrap().len() > 40);
    let (_, out, _) = bestow(&["examples", "list-iterator", "--no-trace", "--mode", "atomic-pairs"]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["pairs_adjacent"], true);
    assert!(report.get("owner_trace").is_none());
}

#[test]
fn usage_errors() {
    assert_eq!(bestow(&["frobnicate"]).0, EXIT_DIAGNOSTICS);
    assert_eq!(bestow(&["--help"]).0, EXIT_OK);
    let (code, _, err) = bestow(&["check", "/nonexistent.bst"]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("cannot read"), "{err}");
}
