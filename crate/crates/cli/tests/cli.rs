use std::path::Path;
use std::process::{Command, Output};

const SMALL_MULTIPLIER: &str = r#"{
  "model": {"builder": "cycle_laplacian", "params": {"n": 32}},
  "multipliers": [{"name": "identity"}],
  "atoms": {"radii": [2.5, 4.5], "per_radius": 2},
  "alpha": 1.0,
  "q": 1.0
}"#;

fn hardylab(dir: &Path, experiment: &str, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hardylab"));
    cmd.arg(experiment).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out")).args(extra);
    cmd.env_remove("HARDYLAB_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

#[test]
fn small_run_writes_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = hardylab(dir.path(), "multiplier-verify", SMALL_MULTIPLIER, &["--seed", "3"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["experiment"], "multiplier-verify");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    for name in m["outputs"].as_array().unwrap() {
        assert!(dir.path().join("out").join(name.as_str().unwrap()).is_file());
    }
    assert!(dir.path().join("out/multiplier_verify_identity.svg").is_file());
}

#[test]
fn identity_multiplier_leaves_h1_norms_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let out = hardylab(dir.path(), "multiplier-verify", SMALL_MULTIPLIER, &[], &[]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("out/multiplier_verify_identity.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (h_in, h_out) = (col("h1_in"), col("h1_out"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (a, b): (f64, f64) = (f[h_in].parse().unwrap(), f[h_out].parse().unwrap());
        assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 4);
}

#[test]
fn alpha_at_half_q_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_MULTIPLIER.replace("\"alpha\": 1.0", "\"alpha\": 0.5");
    let out = hardylab(dir.path(), "multiplier-verify", &cfg, &[], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
    assert!(!dir.path().join("out").exists(), "validation runs before any output");
}

#[test]
fn bad_invocations_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hardylab(dir.path(), "no-such-experiment", SMALL_MULTIPLIER, &[], &[]).status.code(), Some(2));
    assert_eq!(hardylab(dir.path(), "space-report", "{\"modle\": 1}", &[], &[]).status.code(), Some(2));
    let unknown_builder = r#"{"model": {"builder": "torus", "params": {}}}"#;
    let out = hardylab(dir.path(), "space-report", unknown_builder, &[], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["exit_code"], 2);
    let out = hardylab(dir.path(), "space-report", SMALL_MULTIPLIER, &[], &[("HARDYLAB_JOBS", "many")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_the_jobs_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = hardylab(dir.path(), "space-report", SMALL_MULTIPLIER, &["--jobs", "1"], &[("HARDYLAB_JOBS", "3")]);
    assert!(out.status.success());
    assert_eq!(manifest(dir.path())["jobs"], 3);
    let out = hardylab(dir.path(), "space-report", SMALL_MULTIPLIER, &["--jobs", "2"], &[]);
    assert!(out.status.success());
    assert_eq!(manifest(dir.path())["jobs"], 2);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = hardylab(dir.path(), "multiplier-verify", SMALL_MULTIPLIER, &["--seed", "11", "--jobs", jobs], &[]);
        assert!(out.status.success());
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir.path().join("out")).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv" || e == "svg") {
                files.push((path.file_name().unwrap().to_owned(), std::fs::read(&path).unwrap()));
            }
        }
        files.sort();
        files
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn seed_changes_the_config_hash() {
    let hash = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        assert!(hardylab(dir.path(), "space-report", SMALL_MULTIPLIER, &["--seed", seed], &[]).status.success());
        manifest(dir.path())["config_sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(hash("1"), hash("1"));
    assert_ne!(hash("1"), hash("2"));
}
