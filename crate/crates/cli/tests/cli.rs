use std::path::Path;
use std::process::{Command, Output};

fn gaussbound(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussbound"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("GAUSSBOUND_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(gaussbound(d, &["reconstruct", "--scheme", "raw", "--step", "0.5"]).status.code(), Some(0));
    assert_eq!(gaussbound(d, &["reconstruct", "--scheme", "bounded", "--range", "-5:5"]).status.code(), Some(1));
    assert_eq!(gaussbound(d, &["reconstruct", "--scheme", "nope"]).status.code(), Some(2));
    assert_eq!(gaussbound(d, &["signs", "--n", "0"]).status.code(), Some(2));
    assert_eq!(gaussbound(d, &["probe", "--epsilon", "1.5"]).status.code(), Some(2));
    assert_eq!(gaussbound(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(gaussbound(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn summaries_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussbound(dir.path(), &["bumpcheck", "--k", "100,1000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS "), "{out}");
    let csv = std::fs::read_to_string(dir.path().join("bumpcheck.csv")).unwrap();
    assert!(csv.starts_with("k,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn json_documents_carry_a_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussbound(dir.path(), &["signs", "--n", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("signs_n3.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn flags_win_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "format = \"json\"\nn = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(gaussbound(dir.path(), &["signs", "--config", cfg]).status.code(), Some(0));
    assert!(dir.path().join("signs_n2.json").exists());
    assert_eq!(gaussbound(dir.path(), &["signs", "--config", cfg, "--n", "3", "--format", "csv"]).status.code(), Some(0));
    assert!(dir.path().join("signs_n3.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    let o = gaussbound(dir.path(), &["signs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gaussbound"))
        .args(["signs", "--n", "2"])
        .env("GAUSSBOUND_OUT_DIR", dir.path())
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("signs_n2.csv").exists());
}

#[test]
fn probe_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = gaussbound(d, &["probe", "--kernel", "cauchy", "--n", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let cert = d.join("probe_cauchy_cos_n50.json");
    assert_eq!(gaussbound(d, &["verify", cert.to_str().unwrap()]).status.code(), Some(0));

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    doc["points"][3] = doc["points"][2].clone();
    let forged = d.join("forged.json");
    std::fs::write(&forged, doc.to_string()).unwrap();
    assert_eq!(gaussbound(d, &["verify", forged.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["reconstruct", "--scheme", "combo", "--max-block", "2", "--step", "0.5"];
    let oa = gaussbound(a.path(), &[&args[..], &["--threads", "1"]].concat());
    let ob = gaussbound(b.path(), &[&args[..], &["--threads", "3"]].concat());
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(stdout(&oa), stdout(&ob));
    for name in ["reconstruct_combo.csv", "reconstruct_combo.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}
