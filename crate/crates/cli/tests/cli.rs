use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handover-sim")).args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn malformed_scenario_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"name\": \"x\",\n  \"trials\": \"many\"\n}\n").unwrap();
    let out = bin(&["run", "--scenario", bad.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("trials") && err.contains("line 3"), "{err}");
}

#[test]
fn missing_file_exits_3() {
    let out = bin(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = bin(&["report", "--in", "/nonexistent/results.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_report_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let sc = scenario("juice_box_static.json");
    let out = bin(&["run", "--scenario", sc.to_str().unwrap(), "--trials", "2", "--seed", "5", "--out-dir", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(table.contains("juice_box_static"), "{table}");

    let results = dir.path().join("results.csv");
    let out = bin(&["report", "--in", results.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), table);

    let log = dir.path().join("logs/juice_box_static_trial1.jsonl");
    let out = bin(&["replay", "--log", log.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("trial:      1 (seed 6)") && text.contains("rerun:      identical"), "{text}");
}

#[test]
fn render_writes_pgm_images() {
    let dir = tempfile::tempdir().unwrap();
    let (depth, class) = (dir.path().join("d.pgm"), dir.path().join("c.pgm"));
    let sc = scenario("bottle_static.json");
    let out = bin(&["render", "--scenario", sc.to_str().unwrap(), "--time", "0.5", "--depth", depth.to_str().unwrap(), "--class", class.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for p in [depth, class] {
        let bytes = std::fs::read(p).unwrap();
        assert!(bytes.starts_with(b"P5\n160 120\n"));
    }
}
