//! End-to-end runs of the `superalg` binary: output format, exit codes and
//! determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn superalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superalg")).args(args).env_remove("SUPERALG_DATA").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn check_right_alternative_member_passes() {
    let out = superalg(&["check", "--algebra", "R19", "--identity", "right_alt"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "ITEM R19:right_alt PASS\n");
}

#[test]
fn check_reports_a_violated_identity() {
    let out = superalg(&["check", "--algebra", "R24_bold", "--identity", "binary_minus11"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("ITEM R24_bold:binary_minus11 FAIL"));
}

#[test]
fn trivial_algebra_is_associative() {
    let out = superalg(&["check", "--algebra", "TRIVIAL12", "--identity", "assoc"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_accepts_parameters_and_contexts() {
    let out =
        superalg(&["check", "--algebra", "R01", "--param", "alpha=r", "--context", "-3", "--identity", "binary_assoc"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = superalg(&["check", "--algebra", "R01", "--param", "alpha=-1", "--identity", "right_alt"]);
    assert_eq!(out.status.code(), Some(2), "alpha = -1 is excluded for R01");
}

#[test]
fn check_reads_identity_files() {
    let path = scratch("comm.idl");
    std::fs::write(&path, "comm := x*y - s(x,y)*y*x = 0\n").unwrap();
    let out = superalg(&["check", "--algebra", "TRIVIAL21", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "ITEM TRIVIAL21:comm PASS\n");
    std::fs::write(&path, "comm := x*y - = 0\n").unwrap();
    let out = superalg(&["check", "--algebra", "TRIVIAL21", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_names_are_errors() {
    assert_eq!(superalg(&["check", "--algebra", "R99", "--identity", "assoc"]).status.code(), Some(2));
    assert_eq!(superalg(&["check", "--algebra", "R19", "--identity", "nope"]).status.code(), Some(2));
    assert_eq!(superalg(&["degen", "--arrow", "nope"]).status.code(), Some(2));
}

#[test]
fn classify_type_21_matches_stated_lists() {
    let out = superalg(&["classify", "--type", "2,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 39);
    assert!(text.lines().all(|l| l.starts_with("ITEM 2,1:") && l.contains(" PASS ")));
}

#[test]
fn classify_rejects_empty_sample_list() {
    assert_eq!(superalg(&["classify", "--type", "1,2", "--samples", ""]).status.code(), Some(2));
}

#[test]
fn orbit_dimensions_match_tables() {
    let out = superalg(&["orbitdim", "--all"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().all(|l| l.contains(" PASS ")));
    let out = superalg(&["orbitdim", "--algebra", "R01", "--param", "alpha=0"]);
    assert_eq!(stdout(&out), "ITEM R01[alpha=0] PASS orbit_dim=4\n");
}

#[test]
fn single_arrow_passes() {
    let out = superalg(&["degen", "--arrow", "erratum-1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("ITEM erratum-1 PASS R07 -> R28"));
}

#[test]
fn output_is_sorted_and_reproducible() {
    let a = superalg(&["--jobs", "4", "degen", "--all"]);
    let b = superalg(&["--jobs", "1", "degen", "--all"]);
    assert_eq!(a.stdout, b.stdout);
    let ids: Vec<String> = stdout(&a).lines().map(|l| l.split_whitespace().nth(1).unwrap().to_string()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let z1 = superalg(&["--seed", "3", "z2", "--jordan", "J01", "--eta", "J01.eta1"]);
    let z2 = superalg(&["--seed", "3", "z2", "--jordan", "J01", "--eta", "J01.eta1"]);
    assert_eq!(z1.stdout, z2.stdout);
    assert_eq!(z1.status.code(), Some(0));
}

#[test]
fn z2_acts_by_automorphisms() {
    let out = superalg(&[
        "z2", "--jordan", "J01", "--eta", "J01.eta1", "--param", "a1=1", "--param", "a2=2", "--act", "J01", "a11=2",
        "a32=1", "e=1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(":act:J01")).count(), 1);
}

#[test]
fn symmetrize_and_fingerprint() {
    let out = superalg(&["symmetrize", "--algebra", "R18"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("ITEM R18:theta PASS"));
    let out = superalg(&["fingerprint", "--algebra", "R04", "--param", "alpha=1"]);
    assert!(stdout(&out).contains("der0=2"));
}

#[test]
fn graph_of_empty_arrow_set_is_header_only() {
    let dot = scratch("empty.dot");
    let out = Command::new(env!("CARGO_BIN_EXE_superalg"))
        .args(["graph", "--dot", dot.to_str().unwrap()])
        .env("SUPERALG_DATA", data_dir().join("trivial.alg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&dot).unwrap(),
        "digraph degenerations {\n  rankdir=TB;\n  node [shape=box];\n}\n"
    );
}

#[test]
fn data_directory_override_matches_bundled_data() {
    let bundled = superalg(&["orbitdim", "--all"]);
    let loaded = Command::new(env!("CARGO_BIN_EXE_superalg"))
        .args(["orbitdim", "--all"])
        .env("SUPERALG_DATA", data_dir())
        .output()
        .unwrap();
    assert_eq!(bundled.stdout, loaded.stdout);
}
