//! End-to-end checks of the command-line surface: artifact layout, config
//! overlays, determinism, and the exit-code contract (2 configuration,
//! 3 I/O, 4 numeric, 5 violated invariant).

use std::path::Path;
use std::process::{Command, Output};

fn sentflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = sentflow(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn read(dir: &Path, rel: &str) -> String {
    std::fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// gen-corpus + two quick trainings on the small preset, the shared setup
/// for everything that needs checkpoints.
fn small_fixture(dir: &Path) {
    ok(
        dir,
        &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "c.jsonl"],
    );
    let train = |out_dir: &str, extra: &[&str]| {
        let mut args = vec![
            "train",
            "--corpus",
            "c.jsonl",
            "--out-dir",
            out_dir,
            "--blocks",
            "2",
            "--hidden",
            "16",
            "--epochs",
            "3",
            "--learning-rate",
            "2e-3",
            "--seed",
            "11",
        ];
        args.extend_from_slice(extra);
        ok(dir, &args);
    };
    train("unsup", &[]);
    train("sup", &["--mode", "cluster-supervised"]);
}

#[test]
fn gen_corpus_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "a.jsonl"]);
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "b.jsonl"]);
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "8", "--out", "c.jsonl"]);
    let a = read(d, "a.jsonl");
    assert_eq!(a, read(d, "b.jsonl"));
    assert_ne!(a, read(d, "c.jsonl"));
    assert_eq!(a.lines().count(), 48);
}

#[test]
fn train_writes_checkpoint_loss_curve_and_settings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);

    let loss = read(d, "unsup/loss.csv");
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,mean_loss"));
    assert_eq!(lines.count(), 3);

    let model = sentflow::flow::checkpoint::load_checkpoint(&d.join("unsup/checkpoint.json"))
        .expect("checkpoint should load");
    assert_eq!(model.dim(), 8);
    assert_eq!(model.n_blocks(), 2);

    let echoed: serde_json::Value = serde_json::from_str(&read(d, "unsup/config.json")).unwrap();
    assert_eq!(echoed["command"], "train");
    assert_eq!(echoed["settings"]["epochs"], 3);
    assert_eq!(echoed["settings"]["mode"], "unsupervised");
    assert_eq!(echoed["settings"]["learning_rate"], 2e-3);
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "c.jsonl"]);
    std::fs::write(
        d.join("train.json"),
        r#"{"corpus": "c.jsonl", "epochs": 9, "hidden": 8, "blocks": 2}"#,
    )
    .unwrap();
    ok(
        d,
        &["train", "--config", "train.json", "--out-dir", "run", "--epochs", "2"],
    );
    let echoed: serde_json::Value = serde_json::from_str(&read(d, "run/config.json")).unwrap();
    assert_eq!(echoed["settings"]["epochs"], 2, "flag wins over file");
    assert_eq!(echoed["settings"]["hidden"], 8, "file fills unset flags");
    assert_eq!(echoed["settings"]["corpus"], "c.jsonl");
}

#[test]
fn config_file_problems_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("broken.json"), "{\"epochs\": ").unwrap();
    let out = sentflow(d, &["train", "--config", "broken.json", "--out-dir", "x"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("parse error"));

    std::fs::write(d.join("mistyped.json"), r#"{"epoch": 3}"#).unwrap();
    let out = sentflow(d, &["train", "--config", "mistyped.json", "--out-dir", "x"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("unknown field"));
}

#[test]
fn invalid_flag_values_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "c.jsonl"]);
    let out = sentflow(d, &["train", "--corpus", "c.jsonl", "--out-dir", "x", "--epochs", "0"]);
    assert_eq!(code(&out), 2);
    let out = sentflow(d, &["train", "--corpus", "c.jsonl"]);
    assert_eq!(code(&out), 2, "missing --out-dir is a config error");
    // clap's own usage failures share the configuration exit code.
    let out = sentflow(d, &["no-such-command"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_input_files_are_exit_3_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = sentflow(dir.path(), &["train", "--corpus", "ghost.jsonl", "--out-dir", "x"]);
    assert_eq!(code(&out), 3);
    assert!(stderr_of(&out).contains("ghost.jsonl"));
}

#[test]
fn damaged_checkpoints_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    let interp = |model: &str| {
        sentflow(
            d,
            &[
                "interpolate",
                "--corpus",
                "c.jsonl",
                "--spec",
                "small",
                "--corpus-seed",
                "7",
                "--model",
                model,
                "--from",
                "s000000",
                "--to",
                "s000030",
                "--out",
                "i.csv",
            ],
        )
    };

    let full = read(d, "sup/checkpoint.json");
    std::fs::write(d.join("trunc.json"), &full[..full.len() / 2]).unwrap();
    let out = interp("trunc.json");
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("parse error"));

    let mut value: serde_json::Value = serde_json::from_str(&full).unwrap();
    value["version"] = serde_json::json!(999);
    std::fs::write(d.join("badver.json"), value.to_string()).unwrap();
    let out = interp("badver.json");
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("version 999"));
}

#[test]
fn interpolation_covers_the_unit_interval_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    let args = [
        "interpolate",
        "--corpus",
        "c.jsonl",
        "--spec",
        "small",
        "--corpus-seed",
        "7",
        "--model",
        "sup/checkpoint.json",
        "--from",
        "s000000",
        "--to",
        "s000030",
        "--step",
        "0.25",
        "--out",
        "i.csv",
    ];
    ok(d, &args);
    let first = read(d, "i.csv");
    ok(d, &args);
    assert_eq!(first, read(d, "i.csv"));

    let rows: Vec<&str> = first.lines().collect();
    assert_eq!(rows[0], "t,key,text");
    assert_eq!(rows.len(), 1 + 5, "t = 0, .25, .5, .75, 1");
    assert!(rows[1].starts_with("0.0"));
    assert!(rows[5].starts_with("1.0"));
    for row in &rows[1..] {
        assert_eq!(row.split(',').count(), 3);
    }

    let out = sentflow(
        d,
        &[
            "interpolate",
            "--corpus",
            "c.jsonl",
            "--spec",
            "small",
            "--corpus-seed",
            "7",
            "--model",
            "sup/checkpoint.json",
            "--from",
            "nope",
            "--to",
            "s000001",
            "--out",
            "i.csv",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("nope"));
}

#[test]
fn augmentation_yields_novel_cluster_members() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // The small preset's 12-structure inventory is saturated by its own
    // corpus, so novelty needs the default preset's headroom.
    ok(d, &["gen-corpus", "--spec", "default", "--seed", "3", "--out", "c.jsonl"]);
    let args = [
        "augment",
        "--corpus",
        "c.jsonl",
        "--spec",
        "default",
        "--corpus-seed",
        "3",
        "--content",
        "animal",
        "--budget",
        "5",
        "--seed",
        "4",
        "--out",
        "a.jsonl",
    ];
    ok(d, &args);
    let first = read(d, "a.jsonl");
    ok(d, &args);
    assert_eq!(first, read(d, "a.jsonl"), "identical seeds, identical bytes");

    let corpus = read(d, "c.jsonl");
    assert_eq!(first.lines().count(), 5);
    for (i, line) in first.lines().enumerate() {
        assert!(line.contains(&format!("\"id\":\"aug{i:06}\"")));
        assert!(line.contains("\"role\":\"ARG0\",\"content\":\"animal\""));
        assert!(!corpus.contains(line), "augmented sentences are novel");
    }
}

#[test]
fn projection_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-corpus", "--spec", "small", "--seed", "7", "--out", "c.jsonl"]);
    ok(d, &["project", "--corpus", "c.jsonl", "--out-dir", "proj"]);

    let csv = read(d, "proj/pca.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "id,c0,c1,label");
    assert_eq!(rows.len(), 1 + 48);
    assert!(rows[1].starts_with("s000000,"));

    let svg = read(d, "proj/pca.svg");
    assert!(svg.starts_with("<svg "));
    assert_eq!(svg.matches("<circle").count(), 48);
    assert!(svg.contains(">human</text>") && svg.contains(">animal</text>"));

    let out = sentflow(d, &["project", "--corpus", "c.jsonl", "--out-dir", "p1", "--components", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_writes_the_full_table_set() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    ok(
        d,
        &[
            "eval",
            "--corpus",
            "c.jsonl",
            "--spec",
            "small",
            "--corpus-seed",
            "7",
            "--unsupervised",
            "unsup/checkpoint.json",
            "--supervised",
            "sup/checkpoint.json",
            "--out-dir",
            "eval",
            "--pairs",
            "6",
            "--paths",
            "6",
            "--per-cluster",
            "8",
            "--step",
            "0.25",
            "--resamples",
            "200",
        ],
    );

    let report = read(d, "eval/report.csv");
    let rows: Vec<&str> = report.lines().collect();
    assert_eq!(rows[0], "classifier,regime,accuracy,precision,recall,f1");
    assert_eq!(rows.len(), 1 + 9, "3 classifiers x 3 regimes");
    for regime in ["optimus-like-baseline", "unsupervised", "supervised"] {
        let in_column = rows
            .iter()
            .filter(|r| r.split(',').nth(1) == Some(regime))
            .count();
        assert_eq!(in_column, 3, "three classifier rows for {regime}");
    }
    let json: serde_json::Value = serde_json::from_str(&read(d, "eval/report.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 9);

    let inv = read(d, "eval/invertibility.csv");
    assert_eq!(inv.lines().count(), 1 + 4, "2 regimes x 2 clusters");
    for row in inv.lines().skip(1) {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&ratio));
    }

    let loc = read(d, "eval/localisation.csv");
    assert_eq!(loc.lines().next(), Some("t,unsupervised,supervised"));
    assert_eq!(loc.lines().count(), 1 + 3, "interior points of a 0.25 grid");

    let smooth = read(d, "eval/smoothness.csv");
    assert_eq!(smooth.lines().count(), 1 + 2);
    assert!(smooth.contains("unsupervised,") && smooth.contains("supervised,"));

    let boot = read(d, "eval/bootstrap.csv");
    assert_eq!(boot.lines().count(), 1 + 6, "3 classifiers x 2 comparisons");
    for row in boot.lines().skip(1) {
        let p: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p), "p-value in range: {row}");
    }
}
