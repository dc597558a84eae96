use std::path::Path;
use std::process::{Command, Output};

const BESOV: &str = r#"{
  "command": "besov",
  "field": { "lacunary": { "alpha": 0.5, "n_octaves": 7, "seed": 3 } },
  "lattice": { "k": 1, "n_time": 8, "n_space": 1024, "extent_time": 1.0, "extent_space": 1.0 },
  "q": [2.0]
}"#;

fn run(dir: &Path, sub: &str, config: &str) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_companion-lab"))
        .arg("--out")
        .arg(dir.join("out"))
        .arg(sub)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_companion_passes_and_writes_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        "check-companion",
        r#"{ "command": "check-companion", "compatibility": { "n_samples": 200, "seed": 4 } }"#,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/check-companion.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["tool"], "companion-lab");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
    let csv =
        std::fs::read_to_string(dir.path().join("out/check-companion_compatibility.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("system,"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn digest_ignores_formatting() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), "besov", BESOV).status.code(), Some(0));
    let compact: serde_json::Value = serde_json::from_str(BESOV).unwrap();
    assert_eq!(
        run(b.path(), "besov", &compact.to_string()).status.code(),
        Some(0)
    );
    let digest = |d: &Path| {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("out/besov.json")).unwrap())
                .unwrap();
        v["config_digest"].clone()
    };
    assert_eq!(digest(a.path()), digest(b.path()));
}

#[test]
fn unknown_field_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BESOV.replace("\"seed\": 3", "\"seed\": 3, \"sede\": 1");
    let o = run(dir.path(), "besov", &cfg);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("field.lacunary") && e.contains("sede"), "{e}");
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        "mollifier-audit",
        &BESOV.replace("\"besov\"", "\"mollifier-audit\"").replace(
            "\"q\": [2.0]",
            "\"q\": [2.0], \"epsilons\": { \"values\": [] }",
        ),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("epsilons"), "{}", stderr(&o));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "dissipation", BESOV);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("invoked as `dissipation`"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missed_expectation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BESOV.replace(
        "\"q\": [2.0]",
        "\"q\": [2.0], \"expect\": { \"alpha\": 0.9, \"alpha_tolerance\": 0.01 }",
    );
    let o = run(dir.path(), "besov", &cfg);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL besov/level0/q2"), "{stdout}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/besov.json")).unwrap())
            .unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn csv_tables_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        "dissipation",
        r#"{
  "command": "dissipation",
  "system": { "name": "burgers" },
  "field": { "shock": { "left": [1.0], "right": [0.0] } },
  "lattice": { "k": 1, "n_time": 128, "n_space": 128, "extent_time": 2.0, "extent_space": 1.0 },
  "testfns": [ { "kind": "shock-aligned", "t_center": 1.0, "t_radius": 1.0, "speed": 0.5, "x0": 0.5, "half_width": 0.15, "ramp": 0.15 } ],
  "output_name": "shock"
}"#,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/shock_residuals.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(
        header.starts_with("level,testfn,companion_residual,predicted"),
        "{header}"
    );
    assert_eq!(csv.lines().count(), 2);
}
