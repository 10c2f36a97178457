use std::path::PathBuf;
use std::process::Command;

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn cql(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cql"))
        .args(args)
        .env("CQL_SEED", "7")
        .output()
        .expect("spawn cql");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn check_builtin_bool2_passes() {
    let (code, out, _) = cql(&["check", "--builtin", "bool2"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("co-Girard"));
}

#[test]
fn chain_lists_top_as_dualizer() {
    let (code, out, _) = cql(&["check", "--builtin", "chain:4"]);
    assert_eq!(code, 0);
    let line = out.lines().find(|l| l.starts_with("dualizers")).expect("dualizers line");
    assert!(line.contains("4 (top)"), "{line}");
}

#[test]
fn malformed_input_exits_two_with_line() {
    let (code, _, err) = cql(&["eval", &data("bad.cql"), "--structure", "X", "--formula", "top"]);
    assert_eq!(code, 2);
    assert!(err.contains("line "), "{err}");
}

#[test]
fn unknown_builtin_is_input_error() {
    let (code, _, _) = cql(&["check", "--builtin", "nonsense:3"]);
    assert_eq!(code, 2);
}

#[test]
fn eval_predicate_and_quantifiers() {
    let f = data("pair.cql");
    let (code, out, _) = cql(&["eval", &f, "--structure", "N", "--formula", "(P x0)", "--assign", "x0=a"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "3");
    let (_, out, _) = cql(&["eval", &f, "--structure", "N", "--formula", "(sup x0 (P x0))"]);
    assert_eq!(out.trim(), "3");
    let (_, out, _) = cql(&["eval", &f, "--structure", "N", "--formula", "(inf x0 (P x0))"]);
    assert_eq!(out.trim(), "0");
}

#[test]
fn eval_free_variable_needs_assignment() {
    let (code, _, _) = cql(&["eval", &data("pair.cql"), "--structure", "N", "--formula", "(P x0)"]);
    assert_eq!(code, 2);
}

#[test]
fn tv_on_identical_substructure() {
    let f = data("pair.cql");
    let (code, out, _) = cql(&["tv", &f, "--sub", "N", "--sup", "N"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn sierpinski_has_three_opens() {
    let (code, out, _) = cql(&["topology", &data("sierpinski.cql"), "--space", "S"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().any(|l| l == "opens: 3"), "{out}");
}

#[test]
fn los_depth_one_on_two_factors() {
    let (code, out, _) = cql(&["los-check", &data("factors.cql"), "--depth", "1", "--factor", "A", "--factor", "B"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn ultra_output_reloads() {
    let (code, out, _) = cql(&["ultra", &data("factors.cql"), "--principal", "1", "--factor", "A", "--factor", "B"]);
    assert_eq!(code, 0);
    let mut ws = cql::text::Workspace::new();
    ws.load_str(&out).expect("emitted structure parses");
}

#[test]
fn scripted_compactness_demo() {
    let (code, out, _) = cql(&["compactness-demo"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn output_is_deterministic_and_parallel_agnostic() {
    let f = data("factors.cql");
    let args = ["los-check", f.as_str(), "--depth", "1", "--factor", "A", "--factor", "B"];
    let a = cql(&args);
    let b = cql(&args);
    let mut par = vec!["--parallel"];
    par.extend_from_slice(&args);
    let c = cql(&par);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn records_mode_is_tab_separated() {
    let (code, out, _) = cql(&["--records", "check", "--builtin", "bool2"]);
    assert_eq!(code, 0);
    assert!(out.lines().all(|l| l.contains('\t')), "{out}");
}
