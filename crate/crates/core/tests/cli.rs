use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_darboux"))
}

fn fixture(stem: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{stem}.json")).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn check_reports_and_exit_codes() {
    let (code, out, _) = run(&["check", &fixture("so3")]);
    assert_eq!(code, 0);
    assert!(out.contains("rank: 2"), "{out}");
    let (code, out, _) = run(&["check", &fixture("non_jacobi")]);
    assert_eq!(code, 1);
    assert!(out.contains("jacobi: fail") && out.contains("(1,2,3)"), "{out}");
    let (code, out, _) = run(&["check", &fixture("zero4")]);
    assert_eq!(code, 0);
    assert!(out.contains("rank: 0"), "{out}");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format_version":1,"variables":["x1"],"matrix":[["x1+"]]}"#).unwrap();
    let (code, _, err) = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("error"), "{err}");
    assert_eq!(run(&["check", "/nonexistent.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["simulate", &fixture("non_jacobi"), "--x0", "1,1,1"]).0, 2);
    assert_eq!(run(&["simulate", &fixture("so3"), "--x0", "-1,1,1"]).0, 2);
}

#[test]
fn reduce_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    assert_eq!(run(&["reduce", &fixture("kermack"), "-o", &out("k.json")]).0, 0);
    assert_eq!(run(&["reduce", &fixture("so3"), "--require-jacobian", "-o", &out("s.json")]).0, 3);
    assert_eq!(run(&["reduce", &fixture("so3"), "--allow-ntt", "-o", &out("n.json")]).0, 0);
    assert_eq!(run(&["reduce", &fixture("non_jacobi"), "-o", &out("x.json")]).0, 4);
    assert_eq!(run(&["reduce", &fixture("so3"), "--require-jacobian", "--any-congruence"]).0, 2);
    let text = std::fs::read_to_string(out("n.json")).unwrap();
    assert!(text.contains("\"status\": \"ntt-congruence\"") && text.contains("x1*x2*x3"), "{text}");
    let text = std::fs::read_to_string(out("k.json")).unwrap();
    assert!(text.contains("\"x1+x2+x3\""), "{text}");
}

#[test]
fn verify_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    for stem in ["kermack", "toda3"] {
        let result = dir.path().join(format!("{stem}.result.json")).display().to_string();
        assert_eq!(run(&["reduce", &fixture(stem), "-o", &result]).0, 0);
        let (code, out, _) = run(&["verify", &fixture(stem), &result]);
        assert_eq!(code, 0, "{out}");
    }
    let path = dir.path().join("kermack.result.json");
    let mut r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    r["k"][2][0] = serde_json::Value::String("2".into());
    std::fs::write(&path, r.to_string()).unwrap();
    let (code, out, _) = run(&["verify", &fixture("kermack"), path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL") && out.contains("witness"), "{out}");
}

#[test]
fn reduce_is_byte_identical() {
    let a = run(&["reduce", &fixture("toda3"), "--seed", "3"]);
    let b = run(&["reduce", &fixture("toda3"), "--seed", "3"]);
    assert_eq!(a, b);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let (code, out, _) =
        run(&["simulate", &fixture("so3_rigid_body"), "--x0", "1,1,1", "--t-end", "1", "-o", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("hamiltonian drift"), "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x3,H,C1"));
    assert_eq!(lines.count(), 1001);
    let (code, out, _) = run(&["simulate", &fixture("zero4"), "--x0", "1,2,3,4", "--t-end", "0.01", "--dt", "0.005"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').skip(1).take(4).eq(["1", "2", "3", "4"])), "{out}");
}

#[test]
fn simulate_uses_result_casimirs() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("t.json").display().to_string();
    assert_eq!(run(&["reduce", &fixture("toda3"), "-o", &result]).0, 0);
    let (code, out, _) =
        run(&["simulate", &fixture("toda3"), "--x0", "1,0.5,0.3,-0.2,0.1", "--t-end", "0.1", "--result", &result]);
    assert_eq!(code, 0);
    assert!(out.starts_with("t,x1,x2,x3,x4,x5,H,C1\n"), "{out}");
}
