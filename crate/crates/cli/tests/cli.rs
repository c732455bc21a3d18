use std::path::Path;
use std::process::Command;

fn subflow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subflow"))
}

fn config(name: &str) -> String {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs")).join(name).display().to_string()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn solve_prints_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 33\nnz = 17\n");
    let out = dir.path().join("out");
    let result = subflow().args(["solve", "--config", &cfg, "--out"]).arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("solve.converged"));
    assert_eq!(std::fs::read_to_string(out.join("report.txt")).unwrap(), stdout);
    assert!(String::from_utf8_lossy(&result.stderr).lines().any(|l| l.starts_with("iter\t")));
}

#[test]
fn supersonic_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let result =
        subflow().args(["verify", "--config", &config("supersonic.toml"), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_and_invalid_configs_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml").display().to_string();
    let result = subflow().args(["solve", "--config", &missing]).output().unwrap();
    assert_eq!(result.status.code(), Some(3));

    let bad = write_config(dir.path(), "[weights]\nalpha = 0.3\nbeta = 0.4\n");
    let result = subflow().args(["solve", "--config", &bad, "--out"]).arg(dir.path().join("o")).output().unwrap();
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn seed_flag_is_recorded_in_written_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 33\nnz = 17\n");
    let out = dir.path().join("out");
    let result = subflow().args(["solve", "--config", &cfg, "--seed", "42", "--out"]).arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0));
    assert!(std::fs::read_to_string(out.join("config.toml")).unwrap().contains("seed = 42"));
}
