use std::path::Path;
use std::process::{Command, Output};

fn lbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbt")).args(args).output().expect("spawn lbt")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn build_layout_writes_scenario_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = lbt(&["build-layout", "--layout", "toy", "--output-dir", &arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("scenario.json").exists());
    assert!(stderr(&o).contains("layout = \"toy\""));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = lbt(&["baseline", "--layout", "l1", "--cws", "2", "--output-dir", &arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[config]"));
}

#[test]
fn missing_checkpoint_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = lbt(&["evaluate", "--layout", "toy", "--checkpoint", &arg(&missing), "--output-dir", &arg(dir.path())]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("error[io]"));
}

#[test]
fn file_settings_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "layout = \"toy\"\nhyper_preset = \"desk\"\n[env]\nepisode_len = 40\n").unwrap();
    let o = lbt(&[
        "baseline",
        "--config",
        &arg(&cfg),
        "--episode-len",
        "99",
        "--realizations",
        "2",
        "--output-dir",
        &arg(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("episode_len = 40"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("episode_len = 40"));
    let csv = std::fs::read_to_string(dir.path().join("baselines.csv")).unwrap();
    // 2 test configurations x 2 realizations x 3 policies
    assert_eq!(csv.lines().count(), 1 + 12);
}

#[test]
fn train_evaluate_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = arg(dir.path());
    let common = [
        "--layout", "toy", "--episode-len", "25", "--iterations", "2", "--realizations", "2", "--output-dir", &out,
    ];
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "[hyper]\ndense = 8\nhidden = 4\nbatch_episodes = 2\nseq_len = 5\nvalidation_every = 1\nvalidation_realizations = 1\n",
    )
    .unwrap();
    let with_cfg = |cmd: &str, extra: &[&str]| {
        let mut a = vec![cmd, "--config", cfg.to_str().unwrap()];
        a.extend_from_slice(&common);
        a.extend_from_slice(extra);
        lbt(&a)
    };
    let o = with_cfg("train", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ck = dir.path().join("checkpoint.json");
    let o = with_cfg("evaluate", &["--checkpoint", ck.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("rl") && stdout.contains("adaptive-ed"));

    let plots = dir.path().join("plots");
    let o = lbt(&[
        "plot",
        "--training-log",
        &arg(&dir.path().join("training_log.csv")),
        "--evaluation",
        &arg(&dir.path().join("evaluation.csv")),
        "--output-dir",
        &arg(&plots),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = std::fs::read_to_string(plots.join("validation_curve.csv")).unwrap();
    assert!(curve.starts_with("series,x,y\n"));
    assert!(curve.contains("\nrl-smoothed,"));
    assert!(curve.contains("\ned(-72),"));
}
