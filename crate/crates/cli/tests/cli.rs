use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ensemble_projection::dataset::read_matrix;
use ensemble_projection::ensemble::{load_model, project_all};
use ensemble_projection::Format;

fn ep(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ep"))
        .args(args)
        .current_dir(dir)
        .env_remove("EP_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = ep(args, dir);
    assert!(
        out.status.success(),
        "ep {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn blobs(dir: &Path, format: &str) {
    ok(
        &[
            "synth",
            "--classes",
            "3",
            "--samples-per-class",
            "20",
            "--dims",
            "5",
            "--std",
            "1.5",
            "--format",
            format,
            "--seed",
            "4",
            "--out",
            "data",
        ],
        dir,
    );
}

#[test]
fn fit_then_project_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "epb");
    ok(
        &[
            "fit",
            "--features",
            "data/features.epb",
            "--format",
            "epb",
            "--preset",
            "desk",
            "--T",
            "4",
            "--model",
            "m.epm",
        ],
        d,
    );
    ok(
        &[
            "project",
            "--model",
            "m.epm",
            "--features",
            "data/features.epb",
            "--format",
            "epb",
            "--out",
            "p.epb",
        ],
        d,
    );
    let model = load_model(d.join("m.epm")).unwrap();
    assert_eq!(model.projections().len(), 4);
    let x = read_matrix(d.join("data/features.epb"), Format::Epb).unwrap();
    let cli = read_matrix(d.join("p.epb"), Format::Epb).unwrap();
    assert_eq!(cli.n_dims(), 40);
    assert_eq!(cli, project_all(&model, &x).unwrap());
}

#[test]
fn fit_defaults_give_a_3000_wide_projection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "csv");
    ok(
        &["fit", "--features", "data/features.csv", "--model", "m.epm"],
        d,
    );
    let p = *load_model(d.join("m.epm")).unwrap().params();
    assert_eq!(
        (p.n_trials, p.n_prototypes, p.prototype_size, p.n_hypotheses),
        (100, 30, 6, 50)
    );
    assert_eq!(p.base_learner.c_reg, 15.0);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ep(&["fit", "--features", "missing.csv", "--model", "m.epm"], d);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");

    blobs(d, "csv");
    ok(
        &[
            "fit",
            "--features",
            "data/features.csv",
            "--preset",
            "desk",
            "--T",
            "2",
            "--model",
            "m.epm",
        ],
        d,
    );
    fs::write(d.join("narrow.csv"), "1,2\n3,4\n").unwrap();
    let out = ep(
        &[
            "project",
            "--model",
            "m.epm",
            "--features",
            "narrow.csv",
            "--out",
            "p.csv",
        ],
        d,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
    assert!(!d.join("p.csv").exists());

    let out = ep(&["ssl", "--features", "data/features.csv", "--out", "o"], d);
    assert!(!out.status.success());
    let out = ep(
        &[
            "fit",
            "--features",
            "data/features.csv",
            "--r",
            "1000",
            "--model",
            "x",
        ],
        d,
    );
    assert!(!out.status.success());
}

#[test]
fn ssl_emits_one_row_per_ladder_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "csv");
    let table = ok(
        &[
            "ssl",
            "--features",
            "data/features.csv",
            "--labels",
            "data/labels.txt",
            "--preset",
            "desk",
            "--T",
            "5",
            "--per-class",
            "1,2,5",
            "--out",
            "ssl",
        ],
        d,
    );
    let curve = fs::read_to_string(d.join("ssl/curve.csv")).unwrap();
    let first: Vec<&str> = curve
        .lines()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(first, ["1", "2", "5"]);
    assert_eq!(table.lines().count(), 4);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("ssl/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(
        report["config"]["eval"]["per_class"],
        serde_json::json!([1, 2, 5])
    );
    assert_eq!(report["results"].as_array().unwrap().len(), 3);
    assert!(report["config"].get("threads").is_none());
}

#[test]
fn observe2_emits_one_curve_per_noise_rate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "csv");
    ok(
        &[
            "observe2",
            "--features",
            "data/features.csv",
            "--labels",
            "data/labels.txt",
            "--noise",
            "0,0.4,0.8",
            "--t-grid",
            "1,5",
            "--out",
            "o2",
        ],
        d,
    );
    let curve = fs::read_to_string(d.join("o2/curve.csv")).unwrap();
    let rates: Vec<&str> = curve
        .lines()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(rates, ["0", "0", "0.4", "0.4", "0.8", "0.8"]);
}

#[test]
fn remaining_subcommands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "csv");
    let common = [
        "--features",
        "data/features.csv",
        "--labels",
        "data/labels.txt",
    ];
    let run = |cmd: &str, extra: &[&str]| {
        let mut args = vec![cmd];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        ok(&args, d)
    };
    run(
        "cluster",
        &[
            "--preset", "desk", "--T", "3", "--seeds", "2", "--out", "cl",
        ],
    );
    assert_eq!(
        fs::read_to_string(d.join("cl/assignments.csv"))
            .unwrap()
            .lines()
            .count(),
        60
    );
    assert_eq!(
        fs::read_to_string(d.join("cl/purity.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    run("observe1", &["--k", "500", "--out", "o1"]);
    // rank is capped at n - 1
    assert_eq!(
        fs::read_to_string(d.join("o1/curve.csv"))
            .unwrap()
            .lines()
            .count(),
        59
    );
    run(
        "selftaught",
        &[
            "--pool",
            "data/features.csv",
            "--preset",
            "desk",
            "--T",
            "3",
            "--per-class",
            "2",
            "--classifier",
            "knn1",
            "--out",
            "st",
        ],
    );
    assert!(d.join("st/report.json").exists());
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    blobs(d, "csv");
    let args = [
        "cluster",
        "--features",
        "data/features.csv",
        "--labels",
        "data/labels.txt",
        "--preset",
        "desk",
        "--T",
        "4",
        "--seed",
        "9",
        "--out",
        "r",
    ];
    let files = ["report.json", "assignments.csv", "purity.csv"];
    ok(&args, d);
    let first: Vec<String> = files
        .iter()
        .map(|f| fs::read_to_string(d.join("r").join(f)).unwrap())
        .collect();
    ok(&args, d);
    for (f, before) in files.iter().zip(&first) {
        assert_eq!(
            &fs::read_to_string(d.join("r").join(f)).unwrap(),
            before,
            "{f}"
        );
    }
}
