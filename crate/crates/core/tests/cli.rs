//! The `prep`/`tune`/`train`/`eval` workflow through the shipped binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use puffin_sentiment::cli::{
    ReportFile, SplitManifest, BEST_CONFIG_FILE, CHECKPOINT_FILE, CURVE_FILE, HISTORY_FILE, MANIFEST_FILE,
    POLYGON_FILE, REPORT_FILE, ROC_FILE, TFIDF_FILE, TRIALS_FILE,
};
use puffin_sentiment::evalkit::pam;
use puffin_sentiment::hypertune::BestConfig;
use puffin_sentiment::tinyformer::checkpoint;
use puffin_sentiment::trainer::initial_params;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_puffin-sentiment"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn prep(out: &Path) {
    let data = common::toy_corpus();
    ok(&["prep", "--data", data.to_str().unwrap()], out);
}

fn read(out: &Path, file: &str) -> String {
    std::fs::read_to_string(out.join(file)).unwrap()
}

#[test]
fn missing_corpus_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["prep", "--data", "no/such/corpus.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/corpus.csv"));
}

#[test]
fn prep_without_data_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["prep"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn prep_splits_seventy_thirty_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    prep(a.path());
    let manifest: SplitManifest = serde_json::from_str(&read(a.path(), MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.corpus_size, 240);
    assert_eq!(manifest.train_ids.len(), 168);
    assert_eq!(manifest.test_ids.len(), 72);
    let mut all: Vec<usize> = manifest.train_ids.iter().chain(&manifest.test_ids).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..240).collect::<Vec<_>>());

    prep(b.path());
    prep(a.path());
    for file in [MANIFEST_FILE, TFIDF_FILE] {
        assert_eq!(read(a.path(), file), read(b.path(), file), "{file} differs between runs");
    }
}

#[test]
fn prep_seed_changes_the_split() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let data = common::toy_corpus();
    ok(&["prep", "--data", data.to_str().unwrap(), "--seed", "1"], a.path());
    ok(&["prep", "--data", data.to_str().unwrap(), "--seed", "2"], b.path());
    assert_ne!(read(a.path(), MANIFEST_FILE), read(b.path(), MANIFEST_FILE));
}

#[test]
fn tune_records_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    prep(dir.path());
    let args = ["tune", "--pop", "2", "--iters", "1", "--trial-epochs", "1", "--trial-subsample", "32", "--batch-size", "16"];
    ok(&args, dir.path());
    let trials = read(dir.path(), TRIALS_FILE);
    let mut lines = trials.lines();
    assert_eq!(lines.next(), Some("trial,lr,n_heads,d_model,fitness,seconds"));
    assert_eq!(lines.count(), 4);
    assert_eq!(read(dir.path(), HISTORY_FILE).lines().count(), 3);

    let best = BestConfig::load(dir.path().join(BEST_CONFIG_FILE)).unwrap();
    assert_eq!(best.d_model % best.n_heads, 0);
    assert!((16..=128).contains(&best.d_model));
    assert_eq!(best.d_ff, 4 * best.d_model);
    assert!(best.lr >= 10f64.powf(-4.5) && best.lr <= 10f64.powf(-2.5));

    let first = read(dir.path(), BEST_CONFIG_FILE);
    ok(&args, dir.path());
    assert_eq!(read(dir.path(), BEST_CONFIG_FILE), first);
}

#[test]
fn zero_epochs_keeps_the_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    prep(dir.path());
    ok(&["train", "--epochs", "0"], dir.path());
    assert_eq!(read(dir.path(), CURVE_FILE), "epoch,loss,accuracy,lr\n");
    let ckpt = checkpoint::load(dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ckpt.params, initial_params(&ckpt.config, 42).unwrap());
}

#[test]
fn train_then_eval_writes_consistent_reports() {
    let dir = tempfile::tempdir().unwrap();
    prep(dir.path());
    ok(&["train", "--epochs", "12", "--batch-size", "16", "--lr", "0.001"], dir.path());
    let curve = read(dir.path(), CURVE_FILE);
    assert_eq!(curve.lines().count(), 13);

    let summary = ok(&["eval", "--json"], dir.path());
    let summary: serde_json::Value = serde_json::from_str(summary.trim()).unwrap();
    assert_eq!(summary["command"], "eval");

    let report: ReportFile = serde_json::from_str(&read(dir.path(), REPORT_FILE)).unwrap();
    assert_eq!(report.source, "model");
    let t = &report.report.test;
    assert_eq!(t.confusion.total(), 72);
    assert_eq!(report.report.train.confusion.total(), 168);
    let values = [t.ca, t.se, t.sp, t.auc.unwrap(), t.kappa, t.f];
    assert!((pam(values).unwrap() - t.pam.unwrap()).abs() <= 1e-12);
    assert_eq!(report.echo["train"]["max_epochs"], 12);

    let roc = read(dir.path(), ROC_FILE);
    let rows: Vec<&str> = roc.lines().collect();
    assert_eq!(rows[0], "fpr,tpr,threshold");
    assert!(rows[1].starts_with("0,0,"));
    assert!(rows.last().unwrap().starts_with("1,1,"));
    assert_eq!(read(dir.path(), POLYGON_FILE).lines().count(), 7);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    prep(dir.path());
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"train": {"max_epochs": 3, "batch_size": 64}}"#).unwrap();
    ok(&["train", "--config", config.to_str().unwrap(), "--epochs", "1"], dir.path());
    assert_eq!(read(dir.path(), CURVE_FILE).lines().count(), 2);
    let ckpt = checkpoint::load(dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ckpt.echo["train"]["batch_size"], 64);
    assert_eq!(ckpt.echo["train"]["max_epochs"], 1);
}

#[test]
fn eval_without_checkpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    prep(dir.path());
    let o = run(&["eval"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(CHECKPOINT_FILE));
}

#[test]
fn fixture_mode_needs_no_model() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fixture.json");
    std::fs::write(
        &fixture,
        r#"{"train": {"tp": 300, "fn": 40, "fp": 18, "tn": 285}, "test": {"tp": 110, "fn": 20, "fp": 27, "tn": 118}}"#,
    )
    .unwrap();
    let text = ok(&["eval", "--fixture", fixture.to_str().unwrap()], dir.path());
    assert!(text.contains("test accuracy: 82.91%"), "{text}");
    let report: ReportFile = serde_json::from_str(&read(dir.path(), REPORT_FILE)).unwrap();
    assert_eq!(report.source, "fixture");
    assert_eq!(report.display.test_ca, "82.91");
    assert_eq!(report.report.train.confusion.total(), 643);
    assert!(report.report.test.auc.is_none());
    assert!(!dir.path().join(ROC_FILE).exists());
}
