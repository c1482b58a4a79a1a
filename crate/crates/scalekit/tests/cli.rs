//! Black-box tests of the installed binary: config handling, exit codes,
//! stderr categories, and byte-level determinism of the emitted CSV.

use std::path::Path;
use std::process::Command;

fn run(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scalekit"));
    cmd.current_dir(dir)
        .env_remove("SCALEKIT_THREADS")
        .args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const BM_TWO_Q: &str = r#"
[model]
sigma2 = 2.0
mu = 0.0

[scale]
q = [0.0, 0.5]
h = 0.25
x_max = 2.0
"#;

#[test]
fn scale_output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bm.toml", BM_TWO_Q);

    let (code, stdout, _) = run(
        dir.path(),
        &["scale", "--config", &cfg, "--out", "a-", "--threads", "1"],
        &[],
    );
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "a-scale.csv");
    let first = std::fs::read(dir.path().join("a-scale.csv")).unwrap();

    let (code, _, _) = run(
        dir.path(),
        &["scale", "--config", &cfg, "--out", "b-", "--threads", "4"],
        &[],
    );
    assert_eq!(code, 0);
    let second = std::fs::read(dir.path().join("b-scale.csv")).unwrap();
    assert_eq!(first, second, "thread count changed the bytes");

    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# schema-version 1\n"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("q,x,w,z"));
    let rows: Vec<&str> = lines.collect();
    // two q values, eight steps each
    assert_eq!(rows.len(), 16);
    assert_eq!(
        rows[0],
        "0.0000000000000000e0,2.5000000000000000e-1,2.5000000000000000e-1,1.0000000000000000e0"
    );
    // driftless q=0 table is exactly linear out to the last row
    assert_eq!(
        rows[7],
        "0.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0,1.0000000000000000e0"
    );
    assert!(rows[8].starts_with("5.0000000000000000e-1,2.5000000000000000e-1,"));
}

#[test]
fn config_problems_exit_2_with_category() {
    let dir = tempfile::tempdir().unwrap();

    let (code, _, stderr) = run(dir.path(), &["scale", "--config", "missing.toml"], &[]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error: invalid-config:"), "{stderr}");

    let cfg = write_config(dir.path(), "bm.toml", BM_TWO_Q);
    let (code, _, stderr) = run(dir.path(), &["ruin", "--config", &cfg], &[]);
    assert_eq!(code, 2, "missing [ruin] section");
    assert!(stderr.contains("missing a [ruin] section"), "{stderr}");

    let garbled = write_config(dir.path(), "garbled.toml", "model = 3");
    let (code, _, stderr) = run(dir.path(), &["scale", "--config", &garbled], &[]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error: invalid-config:"), "{stderr}");
}

#[test]
fn inadmissible_step_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "stiff.toml",
        r#"
[model]
sigma2 = 0.01
mu = 10.0

[scale]
q = 0.0
h = 0.5
x_max = 2.0
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["scale", "--config", &cfg], &[]);
    assert_eq!(code, 3);
    assert!(stderr.starts_with("error: inadmissible-step:"), "{stderr}");
}

#[test]
fn recursion_overflow_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hot.toml",
        r#"
[model]
sigma2 = 2.0
mu = 0.0

[scale]
q = 1000.0
h = 0.25
x_max = 200.0
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["scale", "--config", &cfg], &[]);
    assert_eq!(code, 4);
    assert!(stderr.starts_with("error: numerical-range:"), "{stderr}");
}

#[test]
fn thread_settings_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bm.toml", BM_TWO_Q);

    let (code, _, stderr) = run(
        dir.path(),
        &["scale", "--config", &cfg],
        &[("SCALEKIT_THREADS", "abc")],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("SCALEKIT_THREADS"), "{stderr}");

    let (code, _, stderr) = run(
        dir.path(),
        &["scale", "--config", &cfg, "--threads", "0"],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("thread count"), "{stderr}");

    let (code, _, _) = run(
        dir.path(),
        &["scale", "--config", &cfg],
        &[("SCALEKIT_THREADS", "2")],
    );
    assert_eq!(code, 0);
}

#[test]
fn sweep_emits_slope_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.toml",
        r#"
[model]
sigma2 = 1.0
mu = 1.0

[sweep]
q = 0.5
points = [0.5, 1.0]
hs = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125]
oracle = "brownian"
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["sweep", "--config", &cfg], &[]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(dir.path().join("scalekit-sweep.csv")).unwrap();
    let slope_line = text
        .lines()
        .find(|l| l.starts_with("# slope-w "))
        .expect("slope comment present");
    let slope: f64 = slope_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((1.8..=2.2).contains(&slope), "unexpected W slope {slope}");
    assert!(
        text.contains("# expected-slope-w 2.0000000000000000e0"),
        "{text}"
    );
    assert!(text.lines().any(|l| l.starts_with("# ratio-w ")));
    let data_rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && l.contains(','))
        .count();
    // header plus one row per step
    assert_eq!(data_rows, 6);
}

#[test]
fn diagnose_reports_class_and_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "stable.toml",
        r#"
[model]
sigma2 = 0.0
mu = 2.0

[[model.pieces]]
lower = -inf
upper = 0.0
form = "power-law"
coeff = 1.0
index = 1.5

[diagnose]
h_candidates = [0.5, 0.25, 0.125]
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["diagnose", "--config", &cfg], &[]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(dir.path().join("scalekit-diagnose.csv")).unwrap();
    assert!(text.contains("# path-class InfiniteVariation"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("# epsilon ")), "{text}");
    assert!(
        text.lines().any(|l| l.starts_with("# expected-slope-w ")),
        "{text}"
    );
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("# h-candidate ") && l.ends_with(" ok"))
            .count(),
        3
    );
    assert!(
        text.lines()
            .any(|l| l.starts_with("# max-admissible-h 5.0000000000000000e-1")),
        "{text}"
    );
}

#[test]
fn ruin_and_cbi_emit_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ruin_cfg = write_config(
        dir.path(),
        "ruin.toml",
        r#"
[model]
sigma2 = 0.0
mu = 5.0

[[model.pieces]]
lower = -inf
upper = 0.0
form = "log-normal"

[ruin]
q = 0.0
h = 0.125
x = 1.0
a = 2.0
y_grid = [0.5, 1.0]
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["ruin", "--config", &ruin_cfg], &[]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(dir.path().join("scalekit-ruin.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# negative-values ")));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "y,k");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let k: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(k.is_finite() && k > 0.0, "implausible density {k}");
    }

    // off-grid start is a config error
    let bad = write_config(
        dir.path(),
        "ruin-bad.toml",
        &std::fs::read_to_string(dir.path().join("ruin.toml"))
            .unwrap()
            .replace("x = 1.0", "x = 0.9"),
    );
    let (code, _, stderr) = run(dir.path(), &["ruin", "--config", &bad], &[]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error: invalid-config:"), "{stderr}");

    let cbi_cfg = write_config(
        dir.path(),
        "cbi.toml",
        r#"
[model]
sigma2 = 0.0
mu = 15.0

[[model.atoms]]
location = -1.0
mass = 0.5

[[model.atoms]]
location = -2.0
mass = 0.5

[[model.pieces]]
lower = -1.0
upper = 0.0
form = "power-law"
coeff = 1.5
index = 1.5

[[model.pieces]]
lower = -2.0
upper = -1.0
form = "cbi-mid"

[[model.pieces]]
lower = -inf
upper = -2.0
form = "cbi-far"

[cbi]
q = 0.0
h = 0.125
b = 1.0
xs = [0.5, 1.0]
immigration_weight = 1.0
immigration_rate = 1.0
"#,
    );
    let (code, _, stderr) = run(dir.path(), &["cbi", "--config", &cbi_cfg], &[]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(dir.path().join("scalekit-cbi.csv")).unwrap();
    assert!(text.contains("# delta0-warning false"), "{text}");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "x,k");
    assert_eq!(rows.len(), 3);
}
