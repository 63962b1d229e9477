use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/gyeonggi/manifest.json")
}

fn vertisite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vertisite"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_fixture() {
    let out = vertisite(&["validate", "--manifest", s(&fixture())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 60 facilities"));
}

#[test]
fn validate_reports_bad_rows_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for e in fs::read_dir(fixture().parent().unwrap()).unwrap() {
        let p = e.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let od = dir.path().join("od.csv");
    let text = fs::read_to_string(&od).unwrap();
    fs::write(&od, text.replacen(",MORNING_PEAK,123", ",MORNING_PEAK,-1", 1)).unwrap();
    let out = vertisite(&["validate", "--manifest", s(&dir.path().join("manifest.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("od.csv:2:"), "{err}");
}

#[test]
fn missing_manifest_exits_2() {
    let out = vertisite(&["validate", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = vertisite(&[
        "run",
        "--manifest",
        s(&fixture()),
        "--emit-intermediate",
        "--gamma-sweep",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("54 candidates ranked"), "{stdout}");
    assert!(stdout.contains("content hash "));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 13, "{names:?}");
    let ranking = fs::read_to_string(dir.path().join("ranking.csv")).unwrap();
    let first = ranking.lines().nth(1).unwrap();
    assert!(first.starts_with("1,c01,E.Gunpo T,"), "{first}");
    assert!(first.ends_with(",153.04"), "{first}");
}

#[test]
fn gamma_flag_matches_manifest_value() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture();
    let hash = |extra: &[&str], sub: &str| {
        let out_dir = dir.path().join(sub);
        let mut args = vec!["run", "--manifest", s(&manifest), "--out", s(&out_dir)];
        args.extend_from_slice(extra);
        let out = vertisite(&args);
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8_lossy(&out.stdout).lines().last().unwrap().to_string()
    };
    assert_eq!(hash(&[], "a"), hash(&["--gamma", "0.5"], "b"));
    assert_ne!(hash(&[], "c"), hash(&["--gamma", "0.7"], "d"));
}

#[test]
fn bad_gamma_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = vertisite(&[
        "run",
        "--manifest",
        s(&fixture()),
        "--gamma",
        "1.2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn http_provider_without_key_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    for e in fs::read_dir(fixture().parent().unwrap()).unwrap() {
        let p = e.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let m = dir.path().join("manifest.json");
    let text = fs::read_to_string(&m).unwrap();
    let text = text.replace(
        r#""kind": "file""#,
        r#""kind": "http", "endpoint": "http://127.0.0.1:9/route", "api_key_env": "VERTISITE_CLI_TEST_NO_KEY""#,
    );
    fs::write(&m, text).unwrap();
    let out = vertisite(&["run", "--manifest", s(&m), "--out", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_synthetic_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = vertisite(&["gen-synthetic", "--seed", "5", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let check = vertisite(&["validate", "--manifest", s(&dir.path().join("manifest.json"))]);
    assert_eq!(
        check.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&check.stderr)
    );
    assert!(String::from_utf8_lossy(&check.stdout).contains("150 facilities"));
}
