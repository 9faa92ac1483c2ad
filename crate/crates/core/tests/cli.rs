use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn icrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icrl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("config.txt");
    fs::write(&path, format!("setting=2\nk_max=15\nseeds=7\n{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_outputs_and_eval_reproduces_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("run");
    let o = icrl(&["run", "--config", &cfg, "--strategy", "pcse", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "cost_final.csv", "costs.csv", "pac.txt", "config.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 16);
    assert!(metrics.lines().nth(1).unwrap().ends_with(",pcse,7"));

    let o = icrl(&["eval", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    fs::write(out.join("metrics.csv"), metrics.replacen(",pcse,7", ",pcse,8", 1)).unwrap();
    let o = icrl(&["eval", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("metrics.eval.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = icrl(&["run", "--config", &cfg, "--strategy", "random", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        texts.push((fs::read(out.join("metrics.csv")).unwrap(), fs::read(out.join("costs.csv")).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn sweep_writes_one_directory_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k_max=3\nseeds=1,2\n");
    let out = tmp.path().join("sweep");
    let o = icrl(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in ["bear", "pcse", "random", "eps-greedy", "max-entropy", "ucb", "uniform"] {
        for seed in [1, 2] {
            assert!(out.join(s).join(format!("seed{seed}")).join("metrics.csv").exists(), "{s}/{seed}");
        }
    }
}

#[test]
fn file_layouts_are_copied_next_to_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let layout = tmp.path().join("grid.txt");
    fs::write(&layout, "3 3 0.0 10\n..G\n.#.\nS..\n").unwrap();
    let cfg = tmp.path().join("c.txt");
    fs::write(&cfg, "layout=grid.txt\nk_max=2\nseeds=1\n").unwrap();
    let out = tmp.path().join("run");
    let o = icrl(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("layout.txt").exists());
    assert!(icrl(&["eval", "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn export_env_writes_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env");
    let o = icrl(&["export-env", "--setting", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let t = fs::read_to_string(out.join("transition.csv")).unwrap();
    assert_eq!(t.lines().count(), 49 * 8);
    for f in ["layout.txt", "reward.csv", "cost.csv", "mu0.csv", "expert_policy.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(icrl(&["run", "--setting", "9"]).status.code(), Some(2));
    assert_eq!(icrl(&["run", "--strategy", "greedy"]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "colour=blue\n");
    assert_eq!(icrl(&["run", "--config", &cfg]).status.code(), Some(2));
    let bad = tmp.path().join("bad.txt");
    fs::write(tmp.path().join("grid.txt"), "3 3 0.0 10\n..G\n.x.\nS..\n").unwrap();
    fs::write(&bad, "layout=grid.txt\n").unwrap();
    let o = icrl(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_inputs_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.txt");
    assert_eq!(icrl(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(icrl(&["eval", "--out", tmp.path().to_str().unwrap()]).status.code(), Some(1));
}
