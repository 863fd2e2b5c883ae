use std::path::Path;
use std::process::{Command, Output};

fn beamtrain(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamtrain"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = beamtrain(args, cwd);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn smoke_pipeline_through_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["--smoke", "scene", "gen", "--out", "scene"], d);
    assert!(d.join("scene/snapshots.bin").exists());
    ok(&["--smoke", "dataset", "build", "--scene", "scene/snapshots.bin", "--out", "rates.bin"], d);
    // tracing again from the config gives the same rows
    ok(&["--smoke", "dataset", "build", "--out", "rates_again.bin"], d);
    assert_eq!(std::fs::read(d.join("rates.bin")).unwrap(), std::fs::read(d.join("rates_again.bin")).unwrap());

    ok(&["dataset", "transform", "--input", "rates.bin", "--to", "tr", "--out", "tr.csv"], d);
    ok(&["dataset", "transform", "--input", "tr.csv", "--to", "atr", "--out", "atr.csv"], d);
    let header = std::fs::read_to_string(d.join("atr.csv")).unwrap();
    assert!(header.starts_with("x,y,snapshot_id,atr_w_1,"));

    let line = ok(&["--smoke", "model", "train", "--role", "theta2-w", "--dataset", "tr.csv", "--out", "ue.bin"], d);
    assert!(line.starts_with("theta2_w params="), "{line}");
    let info = ok(&["model", "inspect", "ue.bin"], d);
    assert!(info.contains("role: theta2_w"));
    assert!(info.contains("budget 2048"));
    assert!(info.contains("depth "));

    ok(&["--smoke", "plan", "build", "--dataset", "rates.bin", "--out", "plan"], d);
    let order = std::fs::read_to_string(d.join("plan/bs_beam_order.csv")).unwrap();
    assert_eq!(order.lines().count(), 65);

    ok(&["--smoke", "eval", "heatmap", "--out", "hm"], d);
    assert!(d.join("hm/heatmap.csv").exists());
    assert!(!d.join("hm/curves.csv").exists());
}

#[test]
fn failures_exit_non_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = beamtrain(&["model", "inspect", "missing.bin"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.bin"));

    std::fs::write(d.join("bad.toml"), "schema_version = 9\n").unwrap();
    assert!(!beamtrain(&["--config", "bad.toml", "eval", "run", "--out", "o"], d).status.success());

    // an ATR dataset cannot feed training
    ok(&["--smoke", "dataset", "build", "--out", "rates.bin"], d);
    ok(&["dataset", "transform", "--input", "rates.bin", "--to", "atr", "--out", "atr.bin"], d);
    let out = beamtrain(&["model", "train", "--role", "theta1", "--dataset", "atr.bin", "--out", "m.bin"], d);
    assert!(!out.status.success());
}
