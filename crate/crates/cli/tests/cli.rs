//! End-to-end runs of the `xyineq` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn xyineq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xyineq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn smoke() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn passing_campaign_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let out = xyineq(&[
        "verify",
        "theorem1",
        "--config",
        smoke().to_str().unwrap(),
        "--trials",
        "10",
        "--jobs",
        "2",
        "--report",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS: 10 of 10"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["instances"].as_array().unwrap().len(), 10);
    assert!(std::fs::read_to_string(&csv)
        .unwrap()
        .starts_with("mode,trial,check,kind"));
}

#[test]
fn smoke_config_runs_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = xyineq(&[
        "verify",
        "all",
        "--config",
        smoke().to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    // the η-limit tolerance is not met at η = 64, so the run reports a violation
    assert_ne!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for mode in [
        "theorem1",
        "corollary",
        "doubling-lemmas",
        "spin1",
        "theorem2",
        "volume-limits",
    ] {
        assert!(text.contains(mode), "{mode} missing from\n{text}");
    }
    assert!(report.exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&xyineq(&["verify", "theorem1", "--config", missing.to_str().unwrap()])),
        2
    );

    let unknown = write(dir.path(), "unknown.json", r#"{"mode": "theorem1", "trails": 3}"#);
    let out = xyineq(&["verify", "theorem1", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    let negative = write(
        dir.path(),
        "negative.json",
        r#"{"mode": "theorem1", "instance": {"sites": ["a", "b"], "couplings": [{"subset": ["a", "b"], "axis": 1, "strength": -0.5}], "a": ["a"], "b": ["b"]}}"#,
    );
    let out = xyineq(&["verify", "theorem1", "--config", negative.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative"));
}

#[test]
fn searched_violation_exits_one_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("violation.json");
    let out = xyineq(&["search-violation", "--seed", "1", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(stdout(&out).contains("violation at trial"));

    let out = xyineq(&["replay", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("bit-identical"));

    // the same instance fed back through a config needs the hypothesis override
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let inst = &json["instances"][0]["instance"];
    let cfg = serde_json::json!({
        "mode": "theorem1",
        "instance": {
            "sites": inst["sites"],
            "axis_pair": inst["couplings"]["axis_pair"],
            "couplings": inst["couplings"]["couplings"],
            "a": inst["a"],
            "b": inst["b"],
        }
    });
    let path = write(dir.path(), "negative.json", &cfg.to_string());
    assert_eq!(
        code(&xyineq(&["verify", "theorem1", "--config", path.to_str().unwrap()])),
        2
    );
    let out = xyineq(&[
        "verify",
        "theorem1",
        "--config",
        path.to_str().unwrap(),
        "--allow-violating-hypotheses",
    ]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
}

#[test]
fn replay_of_a_passing_report_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = xyineq(&[
        "verify",
        "corollary",
        "--config",
        smoke().to_str().unwrap(),
        "--trials",
        "3",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = xyineq(&["replay", report.to_str().unwrap(), "--all"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).matches("bit-identical").count(), 3);
}
