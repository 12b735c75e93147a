use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn bench")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bench(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(bench(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(bench(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["run"], dir.path()).status.code(), Some(1));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bench(&["run", "--config", "nope.toml", "--out", "r.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2), "{}", text(&missing.stderr));
    assert!(text(&missing.stderr).contains("nope.toml"));

    std::fs::write(dir.path().join("bad.toml"), "methods = [\"nope\"]\n").unwrap();
    let bad = bench(&["run", "--config", "bad.toml", "--out", "r.json"], dir.path());
    assert_eq!(bad.status.code(), Some(1), "{}", text(&bad.stderr));
}

#[test]
fn synth_classify_and_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = bench(
        &[
            "synth",
            "--classes",
            "3",
            "--per-class",
            "5",
            "--dim",
            "16",
            "--rho",
            "0.1",
            "--noise",
            "0.05",
            "--seed",
            "4",
            "--out",
            "train.csv",
        ],
        p,
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let out = bench(
        &[
            "synth",
            "--classes",
            "3",
            "--per-class",
            "5",
            "--dim",
            "16",
            "--rho",
            "0.1",
            "--noise",
            "0.05",
            "--seed",
            "4",
            "--out",
            "faces.aimg",
        ],
        p,
    );
    assert!(out.status.success(), "{}", text(&out.stderr));

    let out = bench(
        &[
            "classify",
            "--dict",
            "train.csv",
            "--query",
            "train.csv",
            "--method",
            "crc",
        ],
        p,
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let mut lines = stdout.lines();
    assert!(lines.next().unwrap().starts_with("sample,truth,predicted"));
    assert_eq!(lines.count(), 15);
    assert!(text(&out.stderr).contains("15/15 correct"), "{}", text(&out.stderr));

    let out = bench(
        &[
            "corrupt",
            "--dataset",
            "faces.aimg",
            "--fraction",
            "0.3",
            "--seed",
            "1",
            "--out",
            "noisy.aimg",
        ],
        p,
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let clean = asrc::experiments::load_image_matrix(&p.join("faces.aimg")).unwrap();
    let noisy = asrc::experiments::load_image_matrix(&p.join("noisy.aimg")).unwrap();
    assert_eq!(clean.labels, noisy.labels);
    for j in 0..clean.len() {
        let changed = (0..16)
            .filter(|&i| clean.features[(i, j)] != noisy.features[(i, j)])
            .count();
        assert!(changed <= 4, "sample {j}: {changed} pixels changed");
    }

    let wrong = bench(
        &[
            "classify",
            "--dict",
            "train.csv",
            "--query",
            "faces.aimg",
            "--method",
            "nn",
        ],
        p,
    );
    assert!(wrong.status.success(), "{}", text(&wrong.stderr));
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("cfg.toml"),
        r#"
methods = ["crc", "nn"]

[split]
kind = "k_fold"
k = 3
seed = 2

[[datasets]]
name = "toy"
synth = { classes = 3, per_class = 6, dim = 12, rho = 0.2, seed = 1 }
"#,
    )
    .unwrap();
    for out in ["r.json", "r.csv"] {
        let o = bench(&["run", "--config", "cfg.toml", "--out", out], p);
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    let report =
        asrc::experiments::BenchmarkReport::from_json(&std::fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(report.results.len(), 2);
    let csv = std::fs::read_to_string(p.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn properties_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["properties", "--seed", "3"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stdout));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("[PASS]")), "{stdout}");
}
