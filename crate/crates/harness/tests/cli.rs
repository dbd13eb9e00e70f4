use std::path::Path;
use std::process::{Command, Output};

fn glauber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glauber"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn verify_only_runs_the_requested_group() {
    let out = glauber(&["verify", "--only", "identity"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(!text.is_empty());
    assert!(
        text.lines()
            .all(|l| l.starts_with("identity/") && l.ends_with("PASS")),
        "{text}"
    );
}

#[test]
fn unknown_group_and_corrupted_model_fail() {
    assert_eq!(
        glauber(&["verify", "--only", "nope"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.model");
    std::fs::write(&model, "3 1 0.5 0.5\n0 1 0.5\n1 2 0.5\n").unwrap();
    let out = glauber(&["verify", "--only", "identity", "--model", path(&model)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("degree"),
        "{out:?}"
    );
}

#[test]
fn generate_simulate_learn_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("edge.model");
    let trace = dir.path().join("edge.trace");
    let edges = dir.path().join("edge.edges");
    let ok = |args: &[&str]| {
        let out = glauber(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {out:?}");
    };
    ok(&[
        "generate",
        "--graph",
        "single-edge",
        "--couplings",
        "constant",
        "--theta",
        "1.0",
        "--seed",
        "1",
        "--out",
        path(&model),
    ]);
    ok(&[
        "simulate",
        "--model",
        path(&model),
        "--horizon",
        "20000",
        "--seed",
        "2",
        "--out",
        path(&trace),
    ]);
    ok(&[
        "learn",
        "--trace",
        path(&trace),
        "--L",
        "1",
        "--tau",
        "0",
        "--out",
        path(&edges),
    ]);
    assert_eq!(std::fs::read_to_string(&edges).unwrap(), "0 1\n");
}

#[test]
fn experiment_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 7\ntrials = 4\nhorizon = 2000.0\n\
         [graph]\nkind = \"cycle\"\np = 5\n\
         [couplings]\ntheta = 0.8\n\
         [learner]\nwindow = 1.0\ntau_rule = \"clt\"\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = || {
        let out = glauber(&[
            "experiment",
            "--config",
            path(&config),
            "--out",
            path(&out_dir),
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        ["trials.csv", "manifest.json"].map(|f| std::fs::read(out_dir.join(f)).unwrap())
    };
    let first = run();
    assert!(first == run(), "outputs differ between identical runs");
    let a = &out_dir;
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let learner = &manifest["resolved"]["learner"];
    for key in ["window", "horizon", "q", "k_max", "threshold"] {
        assert!(!learner[key].is_null(), "manifest lacks learner.{key}");
    }
    assert_eq!(manifest["aggregate"]["trials"], 4);
}

#[test]
fn lowerbound_writes_one_row_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("kl.csv");
    let out = glauber(&[
        "lowerbound",
        "--p",
        "8",
        "--d",
        "3",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--n",
        "80",
        "--out",
        path(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).starts_with("M 4 "));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
}
