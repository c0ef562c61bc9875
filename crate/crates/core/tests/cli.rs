use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scope3::encoder::{EncoderConfig, MiniEncoder};
use scope3::taxonomy::Taxonomy;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scope3(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scope3"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn scope3")
}

fn ok(out: &Path, args: &[&str]) {
    let o = scope3(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Exit code and the single stderr line of a failing command.
fn fails(out: &Path, args: &[&str]) -> (i32, String) {
    let o = scope3(out, args);
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    let lines: Vec<&str> = err.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 1, "expected one diagnostic line, got {err:?}");
    (o.status.code().unwrap_or(-1), lines[0].to_string())
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn prepare_is_idempotent_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["prepare", "--seed", "7", "--ratios", "70:20:10"]);
    ok(b.path(), &["prepare", "--seed", "7"]);
    for f in ["split_manifest.json", "train.csv", "validation.csv", "test.csv", "corpus.csv"] {
        assert_eq!(read(a.path().join("data").join(f)), read(b.path().join("data").join(f)), "{f}");
    }
    let m: serde_json::Value = serde_json::from_str(&read(a.path().join("data/split_manifest.json"))).unwrap();
    let r = &m["ratios"];
    assert!((r["train"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!((r["validation"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((r["test"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    let run: serde_json::Value = serde_json::from_str(&read(a.path().join("manifests/prepare.json"))).unwrap();
    assert_eq!(run["seed"], 7);
    assert!(run["outputs"].as_array().unwrap().iter().any(|o| o["path"] == "data/train.csv"));

    ok(b.path(), &["prepare", "--seed", "8"]);
    assert_ne!(read(a.path().join("data/train.csv")), read(b.path().join("data/train.csv")));
}

#[test]
fn usage_and_path_errors() {
    let d = tempfile::tempdir().unwrap();
    let (code, line) = fails(d.path(), &["prepare", "--taxonomy", "/no/such/classes.csv", "--factors", "/no/such/f.csv"]);
    assert_eq!(code, 1);
    assert!(line.contains("--taxonomy"), "{line}");

    let (code, line) = fails(d.path(), &["train", "--family", "neural"]);
    assert_eq!(code, 1);
    assert!(line.contains("unknown classifier family"), "{line}");

    let (code, line) = fails(d.path(), &["frobnicate"]);
    assert_eq!(code, 1);
    assert!(line.contains("frobnicate"), "{line}");

    let (code, line) = fails(d.path(), &["evaluate", "--model", "/no/such/model"]);
    assert_eq!(code, 1);
    assert!(line.contains("--model"), "{line}");

    let (code, _) = fails(d.path(), &["train", "--family", "classical"]);
    assert_eq!(code, 1);

    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "seed = \"x\"\n").unwrap();
    let (code, line) = fails(d.path(), &["prepare", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(line.contains("line 1"), "{line}");

    let help = scope3(d.path(), &["--help"]);
    assert!(help.status.success());
}

#[test]
fn train_evaluate_classify_report() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path();
    ok(out, &["prepare", "--seed", "3", "--synth-per-class", "10"]);
    ok(out, &["train", "--family", "classical", "--trees", "10", "--seed", "3"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("models/classical/manifest.json"))).unwrap();
    assert_eq!(manifest["family"], "classical");
    assert_eq!(manifest["metadata"]["seed"], 3);
    assert_eq!(manifest["label_set"].as_array().unwrap().len(), 66);

    ok(out, &["train", "--family", "zeroshot", "--provider", "hashing:256"]);
    ok(
        out,
        &[
            "evaluate",
            "--model",
            out.join("models/zeroshot").to_str().unwrap(),
            "--model",
            out.join("models/classical").to_str().unwrap(),
        ],
    );
    let rows: serde_json::Value = serde_json::from_str(&read(out.join("eval/comparison.json"))).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["weighted_f1"].as_f64() >= rows[1]["weighted_f1"].as_f64());
    assert!(read(out.join("eval/classical/report.txt")).contains("weighted"));

    ok(out, &["classify", "--text", "electricity bill", "--text", "attorney fees"]);
    let preds = read(out.join("classify/predictions.csv"));
    assert_eq!(preds.lines().count(), 3);
    assert!(preds.starts_with("record_id,text,label,score,top5\n"));

    ok(out, &["estimate", "--ledger", fixture("ledger.csv").to_str().unwrap()]);
    ok(out, &["report"]);
    let summary = read(out.join("report/summary.txt"));
    assert!(summary.contains("# Model comparison") && summary.contains("# Emissions"));
}

#[test]
fn finetuned_grid_point_is_echoed() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path();
    let enc = out.join("encoder");
    let cfg = EncoderConfig { buckets: 256, embed_dim: 8, hidden_dim: 8, min_gram: 3, max_gram: 3, lr_scale: 1.0 };
    MiniEncoder::random("tiny", cfg, 2).save(&enc).unwrap();
    ok(out, &["prepare", "--seed", "5", "--synth-per-class", "5"]);
    ok(
        out,
        &[
            "train",
            "--family",
            "finetuned",
            "--encoder",
            enc.to_str().unwrap(),
            "--learning-rate",
            "5e-6",
            "--max-length",
            "512",
            "--epochs",
            "2",
        ],
    );
    let dir = out.join("models/finetuned");
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["metadata"]["config"]["learning_rate"], 5e-6);
    assert_eq!(manifest["metadata"]["config"]["max_length"], 512);
    assert_eq!(read(dir.join("epoch_log.csv")).lines().count(), 3);
    assert!(read(dir.join("learning_curve.svg")).starts_with("<svg"));
}

/// Test split made of the class descriptions themselves.
fn description_split(dir: &Path) {
    let tax = Taxonomy::canonical();
    let mut csv = String::from("id,text,label\n");
    for c in tax.classes() {
        csv.push_str(&format!("{},\"{}\",{}\n", c.code, c.description.replace('"', "\"\""), c.code));
    }
    std::fs::create_dir_all(dir).unwrap();
    for part in ["train", "validation", "test"] {
        std::fs::write(dir.join(format!("{part}.csv")), &csv).unwrap();
    }
}

#[test]
fn perfect_classifier_scores_one() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path();
    description_split(&out.join("descriptions"));
    ok(out, &["train", "--family", "zeroshot", "--provider", "hashing:512"]);
    ok(out, &["evaluate", "--data", out.join("descriptions").to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&read(out.join("eval/zeroshot/report.json"))).unwrap();
    assert_eq!(report["weighted_f1"], 1.0);
    assert_eq!(read(out.join("eval/zeroshot/low_performance.txt")), "");
}

fn estimate_run(out: &Path, ledger: &Path) {
    ok(out, &["train", "--family", "zeroshot", "--provider", "hashing:512"]);
    ok(out, &["estimate", "--ledger", ledger.to_str().unwrap()]);
}

#[test]
fn estimate_matches_golden_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ledger = fixture("ledger.csv");
    estimate_run(a.path(), &ledger);
    estimate_run(b.path(), &ledger);
    for f in ["report.csv", "lines.csv", "unmapped.csv", "report.json", "spend_emission.svg"] {
        assert_eq!(read(a.path().join("estimate").join(f)), read(b.path().join("estimate").join(f)), "{f}");
    }
    assert_eq!(read(a.path().join("manifests/estimate.json")), read(b.path().join("manifests/estimate.json")).replace(b.path().to_str().unwrap(), a.path().to_str().unwrap()));

    for f in ["report.csv", "lines.csv", "unmapped.csv"] {
        let got = read(a.path().join("estimate").join(f));
        let golden = fixture(&format!("golden/{f}"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
            std::fs::write(&golden, &got).unwrap();
        }
        assert_eq!(got, read(&golden), "{f} differs from golden");
    }

    let unmapped = read(a.path().join("estimate/unmapped.csv"));
    assert!(unmapped.contains("L023,missing amount"));
}

#[test]
fn empty_ledger_gives_empty_report() {
    let d = tempfile::tempdir().unwrap();
    let ledger = d.path().join("empty.csv");
    std::fs::write(&ledger, "id,text,amount,currency\n").unwrap();
    estimate_run(d.path(), &ledger);
    assert_eq!(
        read(d.path().join("estimate/report.csv")),
        "class_code,class_title,total_spend,total_emission_kg,line_count\nTOTAL,,0,0,0\n"
    );
}
