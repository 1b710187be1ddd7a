use dynamo_core::io::read_csv;
use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dynamo-sim");

fn sim(dir: &Path, args: &[&str], config: &str) -> (i32, String, String) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const ONE_MODE: &str = r#"
[model]
v = 0.3
[bath]
omega_over_v = 1.0
g_over_v = 0.5
[grid]
n_steps = 200
"#;

#[test]
fn ed_run_writes_listed_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = sim(dir.path(), &["ed"], ONE_MODE);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("1 runs, 0 failed"));
    let manifest: toml::Table = fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap().parse().unwrap();
    let listed = manifest.to_string();
    for name in ["trajectory.csv", "ledger.csv", "field.csv", "bath.csv"] {
        assert!(listed.contains(name), "{name} missing from manifest");
    }
    let traj = read_csv(&dir.path().join("out/ed/base/trajectory.csv")).unwrap();
    assert_eq!(traj.column("sz").unwrap().len(), 201);
    assert_eq!(traj.column("sz").unwrap()[0], 1.0);
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = sim(dir.path(), &["ed"], "[model]\nv = -1.0\nbogus = 3\n");
    assert_eq!(code, 1);
    assert!(stderr.contains("bogus"), "{stderr}");
}

#[test]
fn failing_sweep_point_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[model]\nv = 0.3\nalpha = 0.01\n[grid]\nn_steps = 50\n[[sweep]]\nparameter = \"model.m\"\nvalues = [0.0, 0.5]\n";
    let (code, stdout, stderr) = sim(dir.path(), &["gkls"], config);
    assert_eq!(code, 2, "{stdout}{stderr}");
    assert!(stdout.contains("2 runs, 1 failed"));
    assert!(dir.path().join("out/gkls/model.m=0/trajectory.csv").exists());
}

#[test]
fn seeded_sse_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[model]\nv = 1.0\nalpha = 0.1\n[sse]\nn_traj = 64\n[grid]\nt_final = 2.0\nn_steps = 40\n";
    let mut runs = Vec::new();
    for workers in ["1", "3"] {
        let (code, _, stderr) = sim(dir.path(), &["sse", "--seed", "5", "--workers", workers], config);
        assert_eq!(code, 0, "{stderr}");
        runs.push(fs::read_to_string(dir.path().join("out/sse/base/trajectory.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn unknown_target_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = sim(dir.path(), &["fig99"], ONE_MODE);
    assert_eq!(code, 1);
}
