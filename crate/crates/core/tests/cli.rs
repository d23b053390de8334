use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use resdac::output::{EMISSIONS_HEADER, METRICS_HEADER, PROPERTIES_HEADER, STATES_HEADER};

fn resdac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resdac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned()
}

const BROKEN: &str = r#"
[run]
horizon = 50

[topology]
roles = ["trusted", "trusted", "ordinary", "adversarial"]
edges = [[1, 3], [2, 3], [3, 4]]

[[signals]]
agent = 1
kind = "constant"
value = 1.0

[[signals]]
agent = 2
kind = "constant"
value = 2.0

[[signals]]
agent = 3
kind = "constant"
value = 3.0

[[adversaries]]
agent = 4
kind = "broadcast"
series = { kind = "constant", value = 9.0 }
"#;

#[test]
fn validate_presets() {
    for preset in ["scenario1", "scenario2"] {
        let o = resdac(&["validate", "--preset", preset]);
        assert!(o.status.success(), "{preset}: {}", stdout(&o));
        assert!(stdout(&o).contains("configuration valid"));
    }
}

#[test]
fn validate_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, BROKEN).unwrap();
    let o = resdac(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL trusted_connected"), "{text}");
    assert!(text.contains("FAIL trusted_dominating"), "{text}");
}

#[test]
fn unknown_preset_is_an_error() {
    let o = resdac(&["validate", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));
}

#[test]
fn preset_text_loads_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = resdac(&["preset", "scenario1"]);
    assert!(text.status.success());
    let path = dir.path().join("s1.toml");
    fs::write(&path, &text.stdout).unwrap();
    let o = resdac(&[
        "bounds",
        "--config",
        path.to_str().unwrap(),
        "--horizon",
        "100",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("horizon=100"));
}

#[test]
fn run_writes_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2");
    let o = resdac(&[
        "run",
        "--preset",
        "scenario2",
        "--horizon",
        "200",
        "--out",
        out.to_str().unwrap(),
        "--emit-matrices",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("envelope_violations=0"));

    assert_eq!(header(&out.join("states.csv")), STATES_HEADER.join(","));
    assert_eq!(header(&out.join("metrics.csv")), METRICS_HEADER.join(","));
    assert_eq!(
        header(&out.join("emissions.csv")),
        EMISSIONS_HEADER.join(",")
    );
    assert_eq!(
        header(&out.join("properties.csv")),
        PROPERTIES_HEADER.join(",")
    );

    let states = fs::read_to_string(out.join("states.csv")).unwrap();
    assert_eq!(states.lines().count(), 1 + 200 * 5);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 200);
    let properties = fs::read_to_string(out.join("properties.csv")).unwrap();
    assert!(properties.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(fs::read_to_string(out.join("matrices.txt"))
        .unwrap()
        .contains("# t=199"));
    assert!(fs::read_to_string(out.join("tracking.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(fs::read_to_string(out.join("bounds.txt"))
        .unwrap()
        .contains("degenerate=false"));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("noisy.toml");
    let text = String::from_utf8(resdac(&["preset", "scenario1"]).stdout).unwrap();
    let noisy = text.replace(
        "kind = \"broadcast\"\nseries = { kind = \"ramp\", offset = 0.0, slope = 0.2 }",
        "kind = \"noisy_broadcast\"\nnoise = 3.0\nseries = { kind = \"ramp\", offset = 0.0, slope = 0.2 }",
    );
    assert_ne!(noisy, text);
    fs::write(&config, &noisy).unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = resdac(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--horizon",
            "150",
            "--no-plots",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.join("tracking.svg").exists());
        runs.push((
            fs::read(out.join("states.csv")).unwrap(),
            fs::read(out.join("emissions.csv")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
}
