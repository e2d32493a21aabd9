use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantor-riesz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn ratio_run_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ratio", "--N", "0,2,4", "--lambda", "0.25", "--refine-k", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("ratio.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("ratio_vs_N.svg").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("[1/C, C]"));
}

#[test]
fn overrides_reach_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "profile", "--d", "2", "--s", "1.2", "--N", "3", "--lambda", "periodic:0.2,0.45",
        "--seed", "17", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("profile.json")).unwrap())
            .unwrap();
    let cfg = &json["provenance"]["config"];
    assert_eq!(cfg["d"], 2);
    assert_eq!(cfg["s"], 1.2);
    assert_eq!(json["provenance"]["seed"], 17);
}

#[test]
fn config_file_with_theta_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"theta_override": [1, 0.5, 2000, 1, 1], "out_dir": "unused"}"#).unwrap();
    let out = dir.path().join("out");
    let o = run(&["stopping", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stopping.json")).unwrap()).unwrap();
    assert_eq!(json["cases"][0]["stops"], serde_json::json!([0, 2, 3, 4]));
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    // inadmissible ratio
    let o = run(&["ratio", "--lambda", "0.6", "--N", "2", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    // unknown config key
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"dimension": 1}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    // missing config file
    assert_eq!(run(&["wolff", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    // unparsable flag
    assert_eq!(run(&["ratio", "--N", "two"]).status.code(), Some(2));
    // s out of range
    assert_eq!(run(&["capacity", "--s", "1.5", "--out", &out]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic() {
    let base = tempfile::tempdir().unwrap();
    let sweep = |name: &str| {
        let dir = base.path().join(name);
        let o = run(&[
            "sweep", "--N", "2,4", "--lambda", "0.25", "--lambda", "random:0.1,0.4,2",
            "--seed", "5", "--refine-k", "2", "--out", &out_arg(&dir),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<(String, String)> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                let text = std::fs::read_to_string(&p).unwrap();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    text.replace(&out_arg(&dir), "OUT"),
                )
            })
            .collect();
        files.sort();
        files
    };
    let a = sweep("a");
    assert!(a.len() >= 6);
    assert_eq!(a, sweep("b"));
}
