use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
episodes = 4
steps = 5
hidden = [16, 8]
buffer_capacity = 64
pool_size = 16
batch_global = 8
batch_local = 8
eval_every = 2
eval_draws = 2
n_conv = 2
";

fn cfxl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfxl")).args(args).output().unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn dump_config_is_deterministic_and_reloadable() {
    let a = cfxl(&["dump-config", "--preset", "paper", "--seed", "3"]);
    let b = cfxl(&["dump-config", "--preset", "paper", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let cfg = cfxl::harness::ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg, {
        let mut p = cfxl::harness::ExperimentConfig::preset("paper").unwrap();
        p.seed = 3;
        p
    });
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(cfxl(&["dump-config", "--preset", "huge"]).status.code(), Some(2));
    assert_eq!(cfxl(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "ue_spacing = 0.7\n").unwrap();
    let out = cfxl(&["dump-config", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ue_spacing"));
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "not_a_key = true\n").unwrap();
    assert_eq!(
        cfxl(&["dump-config", "--config", unknown.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cfxl(&["sweep", "--axis", "colour", "--values", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_checkpoint_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = cfxl(&["eval", "--checkpoint", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_is_reproducible_and_checkpoint_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let res = cfxl(&[
                "train",
                "--config",
                &cfg,
                "--architecture",
                "double",
                "--scenario",
                "pm-dynamic",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
            out
        })
        .collect();
    for file in ["metrics.csv", "summary.json", "checkpoint.json", "config.toml"] {
        let a = std::fs::read(runs[0].join(file)).unwrap();
        let b = std::fs::read(runs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    assert!(runs[0].join("timing.json").is_file());

    let ckpt = runs[0].join("checkpoint.json");
    let saved = runs[0].join("config.toml");
    let out = cfxl(&[
        "eval",
        "--config",
        saved.to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let point: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(runs[0].join("summary.json")).unwrap()).unwrap();
    let last = summary["evaluations"].as_array().unwrap().last().unwrap();
    assert_eq!(&point, last);
}

#[test]
fn sweep_and_simulate_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = cfxl(&[
        "sweep",
        "--config",
        &cfg,
        "--episodes",
        "2",
        "--axis",
        "seed",
        "--values",
        "0,1,2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    let sim_dir = dir.path().join("sim");
    let out = cfxl(&["simulate", "--draws", "200", "--out", sim_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(sim_dir.join("simulation.json")).unwrap()).unwrap();
    assert!(report["closed_form_sum"].as_f64().unwrap() > 0.0);
}
