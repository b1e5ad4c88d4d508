use std::path::{Path, PathBuf};

use gadcl::cli::run_with_io;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with_io(
        std::iter::once("gadcl").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let r = run(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    r.stdout
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn labeled_graph(dir: &Path) -> String {
    let clean = path(dir, "clean.json");
    let g = path(dir, "g.json");
    ok(&[
        "synth", "--nodes", "120", "--dim", "6", "--blocks", "3", "--p-in", "0.12", "--seed", "1",
        "--out", &clean,
    ]);
    ok(&[
        "inject",
        "--in",
        &clean,
        "--out",
        &g,
        "--structural",
        "8",
        "--feature",
        "8",
        "--clique-size",
        "4",
        "--seed",
        "2",
    ]);
    g
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = labeled_graph(d);
    let cfg = path(d, "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"epochs": 4, "batch_size": 32, "hidden_dim": 8, "rounds": 4}"#,
    )
    .unwrap();
    let model = path(d, "model.json");
    let log = path(d, "log.csv");
    ok(&[
        "train", "--data", &g, "--config", &cfg, "--out", &model, "--log", &log, "--aug", "em",
    ]);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 5);

    let scores = path(d, "s.csv");
    ok(&[
        "score", "--data", &g, "--model", &model, "--rounds", "3", "--seed", "7", "--out", &scores,
    ]);
    let text = std::fs::read_to_string(&scores).unwrap();
    assert_eq!(text.lines().next().unwrap(), "node_id,score,label");
    assert_eq!(text.lines().count(), 121);

    let roc = path(d, "roc.csv");
    let stdout = ok(&["eval", "--scores", &scores, "--data", &g, "--roc", &roc]);
    let value: f64 = stdout.trim().strip_prefix("auc=").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
    let roc_text = std::fs::read_to_string(&roc).unwrap();
    assert_eq!(roc_text.lines().next().unwrap(), "fpr,tpr");
    assert_eq!(roc_text.lines().nth(1).unwrap(), "0.0,0.0");
    assert_eq!(roc_text.lines().last().unwrap(), "1.0,1.0");
}

#[test]
fn train_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = labeled_graph(d);
    let cfg = path(d, "cfg.json");
    std::fs::write(&cfg, r#"{"epochs": 50, "hidden_dim": 8}"#).unwrap();
    let model = path(d, "model.json");
    ok(&[
        "train",
        "--data",
        &g,
        "--config",
        &cfg,
        "--out",
        &model,
        "--epochs",
        "1",
        "--hidden-dim",
        "3",
        "--aug",
        "gd",
        "--seed",
        "9",
    ]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc["d"], 6);
    assert_eq!(doc["d_prime"], 3);
    assert_eq!(doc["hyperparams"]["epochs"], 1);
    assert_eq!(doc["hyperparams"]["seed"], 9);
    assert_eq!(doc["hyperparams"]["augmentation"]["method"], "gd");
}

#[test]
fn ablate_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = labeled_graph(d);
    let cfg = path(d, "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"epochs": 2, "batch_size": 64, "hidden_dim": 4, "rounds": 2}"#,
    )
    .unwrap();
    let out = path(d, "ablation.csv");
    let stdout = ok(&[
        "ablate",
        "--data",
        &g,
        "--config",
        &cfg,
        "--variants",
        "ns,ns+nn+ss/fm",
        "--seeds",
        "1,2",
        "--out",
        &out,
    ]);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.contains("variant=ns/em"));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "variant,augmentation,seed,auc");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("ns,em,1,"));
    assert!(rows[3].starts_with("ns+nn+ss,fm,2,"));
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = labeled_graph(d);

    let r = run(&[
        "inject",
        "--in",
        &g,
        "--out",
        &path(d, "x.json"),
        "--structural",
        "5",
        "--feature",
        "0",
        "--clique-size",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.starts_with("error: kind=argument "),
        "{}",
        r.stderr
    );
    assert_eq!(r.stderr.lines().count(), 1);

    let bad = path(d, "bad.json");
    std::fs::write(
        &bad,
        "{\"num_nodes\": 2,\n \"features\": [[1.0], [2.0]],\n \"edges\": [[0, 5]]}",
    )
    .unwrap();
    let r = run(&["train", "--data", &bad]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error: kind=index "), "{}", r.stderr);

    let cfg = path(d, "cfg.json");
    std::fs::write(&cfg, r#"{"epochz": 3}"#).unwrap();
    let r = run(&["train", "--data", &g, "--config", &cfg]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error: kind=schema "), "{}", r.stderr);

    let r = run(&["eval", "--scores", &path(d, "missing.csv"), "--data", &g]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error: kind=io "), "{}", r.stderr);

    let r = run(&[
        "ablate",
        "--data",
        &g,
        "--variants",
        "nn",
        "--seeds",
        "1",
        "--out",
        &path(d, "a.csv"),
    ]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.starts_with("error: kind=argument "),
        "{}",
        r.stderr
    );
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["synth", "--nodes", "10"][..],
        &["train", "--data", "g.json", "--unknown-flag", "1"],
        &["score", "--data", "g.json"],
        &["train", "--data", "g.json", "--aug", "zz"],
        &[],
    ] {
        let r = run(args);
        assert_eq!(r.code, 2, "{args:?}");
        assert!(!r.stderr.is_empty());
    }
}

#[test]
fn help_documents_every_flag() {
    let expect: [(&str, &[&str]); 6] = [
        (
            "synth",
            &[
                "--nodes",
                "--dim",
                "--blocks",
                "--p-in",
                "--p-out",
                "--seed",
                "--out",
                "[default: 0.05]",
                "[default: 0.002]",
            ],
        ),
        (
            "inject",
            &[
                "--in",
                "--out",
                "--structural",
                "--feature",
                "--clique-size",
                "--pool",
                "--seed",
                "[default: 15]",
                "[default: 50]",
            ],
        ),
        (
            "train",
            &[
                "--data",
                "--config",
                "--out",
                "--seed",
                "--aug",
                "--epochs",
                "--batch-size",
                "--hidden-dim",
                "--subgraph-size",
                "--alpha",
                "--beta",
                "--gamma",
                "--lr",
                "--edge-ratio",
                "--restart",
                "--rounds",
                "--variant",
                "--log",
                "--threads",
                "[default: 400]",
                "[default: model.json]",
            ],
        ),
        (
            "score",
            &["--data", "--model", "--rounds", "--seed", "--out"],
        ),
        ("eval", &["--scores", "--data", "--roc"]),
        (
            "ablate",
            &["--data", "--config", "--variants", "--seeds", "--out"],
        ),
    ];
    for (cmd, flags) in expect {
        let text = ok(&[cmd, "--help"]);
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}:\n{text}");
        }
    }
}

#[test]
fn synth_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..3)
        .map(|i| dir.path().join(format!("g{i}.json")))
        .collect();
    for (f, seed) in files.iter().zip(["5", "5", "6"]) {
        ok(&[
            "synth",
            "--nodes",
            "60",
            "--dim",
            "4",
            "--blocks",
            "2",
            "--seed",
            seed,
            "--out",
            f.to_str().unwrap(),
        ]);
    }
    let read = |p: &PathBuf| std::fs::read(p).unwrap();
    assert_eq!(read(&files[0]), read(&files[1]));
    assert_ne!(read(&files[0]), read(&files[2]));
}
