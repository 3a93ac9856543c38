use std::path::Path;
use std::process::{Command, Output};

fn gnrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnrk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gnrk(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_heat(dir: &Path, n_train: &str, n_test: &str) -> std::path::PathBuf {
    let cfg = dir.join("data.cfg");
    std::fs::write(&cfg, "# small graphs\nnodes_min = 10\nnodes_max = 16\nsteps = 20\n").unwrap();
    let data = dir.join("data");
    ok(&[
        "generate",
        "--system",
        "heat",
        "--n-train",
        n_train,
        "--n-test",
        n_test,
        "--seed",
        "7",
        "--config",
        p(&cfg),
        "--out",
        p(&data),
    ]);
    data
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_all_samples() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_heat(dir.path(), "10", "10");
    let manifest = read_json(&data.join("manifest.json"));
    assert_eq!(manifest["samples"].as_array().unwrap().len(), 20);
    assert_eq!(manifest["system"], "heat");
    let summary = ok(&["inspect", p(&data)]);
    assert!(summary.contains("10 train, 10 test"), "{summary}");
}

#[test]
fn train_eval_rollout_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_heat(dir.path(), "2", "3");
    let cfg = dir.path().join("heat.cfg");
    std::fs::write(&cfg, "epochs = 3\nbatch_size = 8\nschedule = constant\nlr = 1e-3\n").unwrap();
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let ckpt = dir.path().join(format!("ckpt_{run}"));
        ok(&[
            "train",
            "--dataset",
            p(&data),
            "--config",
            p(&cfg),
            "--seed",
            "1",
            "--out",
            p(&ckpt),
        ]);
        let report = dir.path().join(format!("report_{run}"));
        ok(&[
            "eval",
            "--ckpt",
            p(&ckpt),
            "--dataset",
            p(&data),
            "--order",
            "1,4",
            "--out",
            p(&report),
        ]);
        let files = [
            ckpt.join("params.bin"),
            ckpt.join("checkpoint.json"),
            ckpt.join("loss.csv"),
            report.join("report.json"),
            report.join("mae_over_time.csv"),
        ];
        digests.push(files.map(|f| std::fs::read(f).unwrap()));
    }
    assert!(digests[0] == digests[1], "runs differ");

    let ckpt = dir.path().join("ckpt_a");
    let loss = std::fs::read_to_string(ckpt.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,lr,train_mse\n"));
    assert_eq!(loss.lines().count(), 4);
    assert!(ok(&["inspect", p(&ckpt)]).contains("parameters  7201"));

    let report = read_json(&dir.path().join("report_a/report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["order"] == 1) && rows.iter().any(|r| r["order"] == 4));
    let csv = std::fs::read_to_string(dir.path().join("report_a/mae_over_time.csv")).unwrap();
    let mut per: std::collections::BTreeMap<(String, String), Vec<f64>> = Default::default();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        per.entry((f[0].into(), f[1].into()))
            .or_default()
            .push(f[4].parse().unwrap());
    }
    let means: Vec<f64> = per
        .values()
        .map(|s| s[1..].iter().sum::<f64>() / (s.len() - 1) as f64)
        .collect();
    let total = means.iter().sum::<f64>() / means.len() as f64;
    assert!((total - report["total"]["mean_mae"].as_f64().unwrap()).abs() < 1e-12);

    let roll = dir.path().join("roll");
    ok(&[
        "rollout",
        "--ckpt",
        p(&ckpt),
        "--dataset",
        p(&data),
        "--order",
        "4",
        "--out",
        p(&roll),
    ]);
    let index = read_json(&roll.join("rollouts.json"));
    let entries = index.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    let first = &entries[0];
    let bytes = std::fs::read(roll.join(first["trajectory_file"].as_str().unwrap())).unwrap();
    let n = first["num_nodes"].as_u64().unwrap() as usize;
    assert_eq!(bytes.len(), 8 * 21 * n);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(gnrk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gnrk(&["inspect", "--bogus", "x"]).status.code(), Some(2));
    assert_eq!(gnrk(&["generate", "--system", "heat"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = gnrk(&[
        "eval",
        "--ckpt",
        p(&missing),
        "--dataset",
        p(&missing),
        "--out",
        p(&missing),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let out = gnrk(&[
        "generate",
        "--system",
        "heat",
        "--n-train",
        "1",
        "--n-test",
        "1",
        "--seed",
        "1",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("d")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn system_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_heat(dir.path(), "1", "1");
    let cfg = dir.path().join("k.cfg");
    std::fs::write(&cfg, "nodes_min = 10\nnodes_max = 12\nsteps = 10\n").unwrap();
    let kdata = dir.path().join("kdata");
    ok(&[
        "generate",
        "--system",
        "kuramoto",
        "--n-train",
        "1",
        "--n-test",
        "1",
        "--seed",
        "3",
        "--config",
        p(&cfg),
        "--out",
        p(&kdata),
    ]);
    let tcfg = dir.path().join("t.cfg");
    std::fs::write(&tcfg, "epochs = 1\n").unwrap();
    let ckpt = dir.path().join("ckpt");
    ok(&[
        "train",
        "--dataset",
        p(&kdata),
        "--config",
        p(&tcfg),
        "--seed",
        "2",
        "--out",
        p(&ckpt),
    ]);
    let out = gnrk(&[
        "eval",
        "--ckpt",
        p(&ckpt),
        "--dataset",
        p(&data),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kuramoto"));
}
