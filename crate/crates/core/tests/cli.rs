use std::fs;
use std::path::Path;
use std::process::Command as Process;

use difflab::cli::{parse_config_text, run_with_workers, Command, RunConfig, FAILED_MARKER, MANIFEST};
use difflab::Error;

const ESTIMATE: &str = "command = estimate\nmodel = ou\nn = 2000\ndelta = 0.1\nbeta = 2\nseed = 9\n";
const LOCALTIME: &str = "command = localtime\nreplicates = 60\nsteps = 400\nseed = 4\n";

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn parser_handles_comments_and_rejects_garbage() {
    let map = parse_config_text("# header\n a = 1 \n\nb=x # trailing\n").unwrap();
    assert_eq!(map.get("a").map(String::as_str), Some("1"));
    assert_eq!(map.get("b").map(String::as_str), Some("x"));
    match parse_config_text("a = 1\nnot a pair\n") {
        Err(Error::Config { key, .. }) => assert_eq!(key, "line 2"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn seed_override_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_text(ESTIMATE, Some(123), dir.path().to_path_buf()).unwrap();
    assert_eq!(cfg.master_seed, 123);
    assert_eq!(cfg.command, Command::Estimate);
    let cfg = RunConfig::from_text(ESTIMATE, None, dir.path().to_path_buf()).unwrap();
    assert_eq!(cfg.master_seed, 9);
}

#[test]
fn missing_beta_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = ESTIMATE.replace("beta = 2\n", "");
    match RunConfig::from_text(&text, None, out.clone()) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "beta"),
        other => panic!("unexpected {other:?}"),
    }
    let cfg_path = dir.path().join("bad.conf");
    fs::write(&cfg_path, text).unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_difflab"))
        .args(["--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("beta"));
    assert!(!out.exists());
}

#[test]
fn runtime_failure_leaves_a_marker_and_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let text = "command = malliavin\nn = 10000\ndelta = 1.5\npaths = 10000\nseed = 1\n";
    let cfg = RunConfig::from_text(text, None, dir.path().to_path_buf()).unwrap();
    assert!(run_with_workers(&cfg, Some(1)).is_err());
    assert!(dir.path().join(FAILED_MARKER).exists());
    assert!(!dir.path().join(MANIFEST).exists());
    assert!(csvs(dir.path()).is_empty());
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    for text in [ESTIMATE, LOCALTIME] {
        let one = tempfile::tempdir().unwrap();
        let two = tempfile::tempdir().unwrap();
        let m1 = run_with_workers(&RunConfig::from_text(text, None, one.path().to_path_buf()).unwrap(), Some(1)).unwrap();
        let m2 = run_with_workers(&RunConfig::from_text(text, None, two.path().to_path_buf()).unwrap(), Some(2)).unwrap();
        assert!(m1.succeeded() && m2.succeeded());
        assert_eq!(m1.artifacts, m2.artifacts);
        let (a, b) = (csvs(one.path()), csvs(two.path()));
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let manifest = fs::read_to_string(one.path().join(MANIFEST)).unwrap();
        assert!(manifest.contains("seed=") && manifest.contains("artifacts="));
    }
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_text(ESTIMATE, None, dir.path().to_path_buf()).unwrap();
    assert!(matches!(run_with_workers(&cfg, Some(0)), Err(Error::Config { .. })));
}
