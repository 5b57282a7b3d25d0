//! End-to-end CLI checks: exit codes, artifact determinism across repeated
//! runs and thread counts, and config diagnostics.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastogauge"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const QP_CONFIG: &str = r#"
kind = "qp-speed"
seed = 0
[domain]
L = [1.0, 1.0]
[material]
family = "isotropic"
lambda = 2.0
mu = 1.0
[probes]
count = 8
"#;

#[test]
fn pass_run_exits_zero_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("qp.toml");
    write(&cfg, QP_CONFIG);
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["qp-speed", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out1.join("qp_speeds.csv")).unwrap();
    let b = std::fs::read(out2.join("qp_speeds.csv")).unwrap();
    assert_eq!(a, b, "identical config + seed must give byte-identical CSVs");
    assert!(out1.join("manifest.toml").exists());

    // a different seed moves the probe points
    let out3 = dir.path().join("out3");
    let status = bin()
        .args(["qp-speed", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out3)
        .args(["--seed", "7"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let c = std::fs::read(out3.join("qp_speeds.csv")).unwrap();
    assert_ne!(a, c, "different seed must move the probe points");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // nonexistent file
    let status = bin()
        .args(["qp-speed", "--config", "/nonexistent/x.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown key
    let cfg = dir.path().join("bad.toml");
    write(&cfg, &format!("{QP_CONFIG}\nnot_a_key = 1\n"));
    let status = bin().args(["qp-speed", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    // kind mismatch between config and subcommand
    let cfg2 = dir.path().join("mismatch.toml");
    write(&cfg2, QP_CONFIG);
    let status = bin().args(["run-dn", "--config"]).arg(&cfg2).status().unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown preset
    let cfg3 = dir.path().join("preset.toml");
    write(
        &cfg3,
        r#"
kind = "table1-preset"
preset = "table1.bogus"
[domain]
L = [1.0, 1.0]
"#,
    );
    let status = bin()
        .args(["table1-preset", "--config"])
        .arg(&cfg3)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

// a strong boundary-fixing bump whose coordinate-change defect dominates the
// coarse-grid discretization error, so the convergence gate fails quickly
const PHI_GAUGE_CONFIG: &str = r#"
kind = "compare-gauge"
seed = 0
[domain]
L = [1.0, 1.0]
[grids]
nx = [17, 25]
[time]
T = 0.8
[material]
family = "isotropic"
lambda = 2.0
mu = 1.0
[source]
face = "x_min"
direction = [1.0, 0.3]
center = 0.5
width = 0.3
frequency = 1.0
burst = 0.4
[gauge]
theorem_mode = true
[gauge.mu]
family = "one"
[gauge.diffeo]
family = "bump_displacement"
amplitude = 0.08
direction = [1.0, 0.5]
collar = 0.15
"#;

#[test]
fn numerical_gate_failure_exits_one() {
    // the coordinate-change pair plateaus (operator defect), so the gate fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phi.toml");
    write(&cfg, PHI_GAUGE_CONFIG);
    let out = dir.path().join("out");
    let output = bin()
        .args(["compare-gauge", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("det Dphi range"), "{stdout}");
    assert!(out.join("gauge_report.csv").exists());
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phi.toml");
    write(&cfg, PHI_GAUGE_CONFIG);
    let out1 = dir.path().join("t1");
    let out2 = dir.path().join("t3");
    for (out, threads) in [(&out1, "1"), (&out2, "3")] {
        let output = bin()
            .args(["compare-gauge", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(1)); // gate fails either way
    }
    let a = std::fs::read(out1.join("gauge_report.csv")).unwrap();
    let b = std::fs::read(out2.join("gauge_report.csv")).unwrap();
    assert_eq!(a, b, "thread count must not change artifact bytes");
}
