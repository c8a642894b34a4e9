//! End-to-end tests of the relhom binary: output formats, exit codes,
//! cache behavior, and the documented example invocations.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../corpus/{name}.pres", env!("CARGO_MANIFEST_DIR")))
}

fn relhom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relhom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn hom_table_row_for_klein_four_degree_four() {
    let out = relhom(&["hom", "-p", corpus("v4").to_str().unwrap(), "-n", "2"]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(stdout_of(&out), "H_4 = (Z/2)^2\n");
}

#[test]
fn hom_json_single_degree_schema() {
    let out = relhom(&["hom", "-p", corpus("c2").to_str().unwrap(), "-n", "1", "--json"]);
    assert_eq!(code_of(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["group_order"], 2);
    assert_eq!(v["degree"], 2);
    assert_eq!(v["result"]["free_rank"], 0);
    assert_eq!(v["result"]["torsion"].as_array().unwrap().len(), 0);
    assert_eq!(v["checks"][0]["name"], "hopf_h2_agrees");
    assert_eq!(v["checks"][0]["pass"], true);
    let hash = v["presentation_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn hom_degree_range_reports_every_degree() {
    let out = relhom(&["hom", "-p", corpus("v4").to_str().unwrap(), "--max-n", "2", "--json"]);
    assert_eq!(code_of(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rows = v.as_array().unwrap();
    let degrees: Vec<u64> = rows.iter().map(|r| r["degree"].as_u64().unwrap()).collect();
    assert_eq!(degrees, vec![1, 2, 3, 4, 5]);
    let torsion = |i: usize| rows[i]["result"]["torsion"].as_array().unwrap().len();
    assert_eq!(torsion(0), 2);
    assert_eq!(torsion(1), 1);
    assert_eq!(torsion(2), 3);
    assert_eq!(torsion(3), 2);
    assert_eq!(torsion(4), 4);
}

#[test]
fn json_output_is_byte_deterministic_and_cache_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap().to_string();
    let pres = corpus("v4");
    let args = ["hom", "-p", pres.to_str().unwrap(), "--max-n", "1", "--json"];
    let cached = [&args[..], &["--cache", &cache]].concat();

    let cold = relhom(&cached);
    assert_eq!(code_of(&cold), 0);
    assert!(
        std::fs::read_dir(dir.path()).unwrap().count() > 0,
        "cold run populates the cache"
    );
    let warm = relhom(&cached);
    let plain = relhom(&args);
    assert_eq!(cold.stdout, warm.stdout, "warm cache changes nothing");
    assert_eq!(cold.stdout, plain.stdout, "cache changes nothing at all");
}

#[test]
fn budget_refusal_exits_with_two() {
    let out = relhom(&["hom", "-p", corpus("s3").to_str().unwrap(), "-n", "1", "--budget", "10"]);
    assert_eq!(code_of(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("budget"), "diagnostic names the budget: {err}");
}

#[test]
fn coset_limit_env_var_caps_enumeration() {
    let out = Command::new(env!("CARGO_BIN_EXE_relhom"))
        .args(["hom", "-p", corpus("c3").to_str().unwrap()])
        .env("RELHOM_COSET_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn syntax_error_exits_with_one_and_points_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.pres");
    std::fs::write(&path, "gens: x\nrels: y\n").unwrap();
    let out = relhom(&["hom", "-p", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "diagnostic locates the error: {err}");
}

#[test]
fn verify_sequence_prints_four_pass_lines() {
    let out = relhom(&["verify", "-p", corpus("s3").to_str().unwrap(), "--suite", "sequence"]);
    assert_eq!(code_of(&out), 0);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")));
}

#[test]
fn verify_all_passes_on_klein_four() {
    let out = relhom(&["verify", "-p", corpus("v4").to_str().unwrap(), "--suite", "all", "-n", "1"]);
    assert_eq!(code_of(&out), 0);
    let text = stdout_of(&out);
    assert!(text.lines().count() >= 15);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
    assert!(text.contains("PASS bar_oracle_agrees"));
}

#[test]
fn limit_reports_match_for_klein_four() {
    let out = relhom(&["limit", "-p", corpus("v4").to_str().unwrap(), "-n", "1"]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(stdout_of(&out), "equalizer = Z/2 ; h_even = Z/2 ; MATCH\n");
}

#[test]
fn limit_gamma_vanishes_for_coprime_order() {
    let out = relhom(&["limit", "-p", corpus("c3").to_str().unwrap(), "-n", "2", "--gamma"]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(stdout_of(&out), "gamma-equalizer = 0\n");
}

#[test]
fn lie_reports_gamma_quotient_with_torsion_checks() {
    let out = relhom(&["lie", "-p", corpus("v4").to_str().unwrap(), "-n", "2"]);
    assert_eq!(code_of(&out), 0);
    let text = stdout_of(&out);
    assert!(text.starts_with("gamma_2 = Z + (Z/4)^2\n"), "got: {text}");
    assert!(text.contains("PASS exponent_bound_holds"));
}

#[test]
fn early_pipe_close_terminates_quietly() {
    let cmd = format!(
        "{} hom -p {} --max-n 2 --json | head -c 16; exit ${{PIPESTATUS[0]}}",
        env!("CARGO_BIN_EXE_relhom"),
        corpus("s3").display()
    );
    let out = Command::new("bash").args(["-c", &cmd]).output().unwrap();
    // 141 = killed by SIGPIPE, the normal fate of a filter whose reader
    // left; a broken-pipe panic would exit 101 with a backtrace instead.
    assert_eq!(out.status.code(), Some(141));
    assert!(out.stderr.is_empty(), "no panic noise: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sign_module_coefficients_twist_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("sign.json");
    std::fs::write(&desc, r#"{"rank": 1, "actions": [[[-1]]]}"#).unwrap();

    let out = relhom(&[
        "hom", "-p", corpus("c2").to_str().unwrap(), "-n", "1", "--coeff",
        desc.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(stdout_of(&out), "H_2 = Z/2\n");

    // The same matrix violates x^3 = 1, so the C3 run must be rejected.
    let bad = relhom(&[
        "hom", "-p", corpus("c3").to_str().unwrap(), "-n", "1", "--coeff",
        desc.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&bad), 1);
}
