//! The binary: flags, exit statuses and output locations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bsde_lab::config::parse_config;
use bsde_lab::output::{RunManifest, RunStatus};

fn lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsde-lab")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn passing_checks_exit_zero_in_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["bounds"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS threshold_matches_reference"));
    let m = RunManifest::read(&dir.path().join("out/bounds")).unwrap();
    assert_eq!(m.status, RunStatus::Ok);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[bounds]\ncheck_tolerance = 1e-9\n");
    let out = lab(&["bounds", "--config", &cfg, "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let m = RunManifest::read(&dir.path().join("b")).unwrap();
    assert_eq!(m.status, RunStatus::ChecksFailed);
    assert!(m.checks.iter().any(|c| !c.passed && c.name == "threshold_matches_reference"));
}

#[test]
fn invalid_config_exits_two_with_quoted_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[weights]\nbeta1_bar = 3.0\n");
    let out = lab(&["table", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("beta1_bar > 4"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pipeline_error_is_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "experiment = \"solve\"\n");
    let out = lab(&["table", "--config", &cfg, "--out", "t"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let m = RunManifest::read(&dir.path().join("t")).unwrap();
    assert_eq!(m.status, RunStatus::Error);
    assert!(m.error.unwrap().contains("subcommand is `table`"));
}

#[test]
fn output_dir_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "output_dir = \"from_config\"\nseed = 4\n[grid]\nsteps = 4\n[ensemble]\npaths = 200\n[weights]\nvariant = \"A1\"\n",
    );
    assert_eq!(lab(&["solve", "--quiet", "--config", &cfg], dir.path()).status.code(), Some(0));
    let a = RunManifest::read(&dir.path().join("from_config")).unwrap();
    assert_eq!(a.seed, 4);
    let out = lab(&["solve", "--quiet", "--config", &cfg, "--seed", "5", "--out", "flag"], dir.path());
    assert!(out.stdout.is_empty());
    let b = RunManifest::read(&dir.path().join("flag")).unwrap();
    assert_eq!(b.seed, 5);
    assert_ne!(a.config_hash, b.config_hash);
    let (ya, yb) = (
        fs::read(dir.path().join("from_config/solution_direct.tsv")).unwrap(),
        fs::read(dir.path().join("flag/solution_direct.tsv")).unwrap(),
    );
    assert_ne!(ya, yb);
    // The recorded config reproduces the run's hash.
    let text = fs::read_to_string(dir.path().join("flag/config.toml")).unwrap();
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(bsde_lab::run::config_hash(&cfg, bsde_lab::config::ExperimentKind::Solve), b.config_hash);
}
