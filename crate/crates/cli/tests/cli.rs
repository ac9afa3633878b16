use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn gnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnet")).args(args).env_remove("GNET_TRACE_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_fixtures() {
    for name in ["matching_pennies.gnet", "coordination.gnet", "beer_quiche.gnet", "beer_quiche.ef"] {
        let o = gnet(&["validate", path(&fixture(name))]);
        assert!(o.status.success(), "{name}");
        assert_eq!(field(&stdout(&o), "status"), Some("valid"));
    }
}

#[test]
fn invalid_game_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gnet");
    std::fs::write(&bad, "players P1\nnode X player=P1 domain=a,b\ncpt X | : a=0.3, b=0.3\n").unwrap();
    assert_eq!(gnet(&["validate", path(&bad)]).status.code(), Some(1));
    let missing = dir.path().join("missing.gnet");
    assert_eq!(gnet(&["info", path(&missing)]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(gnet(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(gnet(&["solve-all"]).status.code(), Some(64));
    assert_eq!(gnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn info_reports_counts() {
    let out = stdout(&gnet(&["info", path(&fixture("pennies_plus_coordination.gnet"))]));
    assert_eq!(field(&out, "components"), Some("2"));
    assert_eq!(field(&out, "total_degree"), Some("81"));
    assert_eq!(field(&out, "decomposed_paths"), Some("18"));
}

#[test]
fn solve_all_lists_coordination_equilibria() {
    let o = gnet(&["solve-all", path(&fixture("coordination.gnet"))]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "nash_count"), Some("3"));
    assert_eq!(out.lines().filter(|l| l.starts_with("solution:")).count(), 3);
}

#[test]
fn solve_first_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnet(&["solve-first", path(&fixture("matching_pennies.gnet")), "--seed", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "nash"), Some("true"));
    let sol = dir.path().join("first.sol");
    std::fs::write(&sol, &out).unwrap();
    let v = gnet(&["verify", path(&fixture("matching_pennies.gnet")), path(&sol)]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    assert_eq!(field(&stdout(&v), "nash"), Some("true"));
}

#[test]
fn verify_names_the_violating_info_set() {
    let ok = gnet(&["verify", path(&fixture("coordination.gnet")), path(&fixture("coordination_aa.sol"))]);
    assert!(ok.status.success());
    let bad = gnet(&["verify", path(&fixture("coordination.gnet")), path(&fixture("coordination_ab.sol"))]);
    let out = stdout(&bad);
    assert_eq!(field(&out, "nash"), Some("false"));
    assert!(field(&out, "violating_info_set").is_some());
}

#[test]
fn trace_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gnet"))
        .args(["solve-first", path(&fixture("prisoners.gnet"))])
        .env("GNET_TRACE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let trace = std::fs::read_to_string(dir.path().join("prisoners.first.trace")).unwrap();
    assert!(trace.lines().count() > 1);

    let explicit = dir.path().join("explicit.trace");
    let o = gnet(&["solve-first", path(&fixture("prisoners.gnet")), "--trace", path(&explicit)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(explicit).unwrap(), trace);
}

#[test]
fn convert_ef_output_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bq.gnet");
    let o = gnet(&["convert-ef", path(&fixture("beer_quiche.ef")), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let info = stdout(&gnet(&["info", path(&out)]));
    assert_eq!(field(&info, "parameters_compact"), Some("8"));
    let first = gnet(&["solve-first", path(&out)]);
    assert!(first.status.success());
}

#[test]
fn agent_form_lists_payoff_entries() {
    let out = stdout(&gnet(&["agent-form", path(&fixture("prisoners.gnet"))]));
    assert_eq!(field(&out, "agents"), Some("2"));
    assert_eq!(out.lines().filter(|l| l.starts_with("entry:")).count(), 4);
}

#[test]
fn seeds_do_not_change_the_equilibrium_set() {
    let a = stdout(&gnet(&["solve-all", path(&fixture("coordination.gnet")), "--seed", "1"]));
    let b = stdout(&gnet(&["solve-all", path(&fixture("coordination.gnet")), "--seed", "2"]));
    assert_eq!(field(&a, "nash_count"), field(&b, "nash_count"));
}
