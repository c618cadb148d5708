//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use puffin_sentiment::cli::{self, ReportFile, BEST_CONFIG_FILE, CURVE_FILE, REPORT_FILE};
use puffin_sentiment::corpus::{load_corpus, Label};
use puffin_sentiment::evalkit::{auc, f_measure, kappa, pam, ConfusionMatrix};
use puffin_sentiment::puffin::{optimize, Bounds, SwarmConfig};
use puffin_sentiment::rng;
use puffin_sentiment::textprep::{fit_tfidf, fit_vocabulary, preprocess, NormMode, Stopwords, TokenSequence};
use puffin_sentiment::tinyformer::{backward, forward, ModelConfig, ParamSet};
use puffin_sentiment::trainer::clip_gradients;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.1}s of {limit_s}s"))
}

fn pam_reproduction() -> Outcome {
    let value = pam([0.83, 0.76, 0.89, 0.82, 0.66, 0.80]).unwrap();
    outcome((value - 0.63).abs() <= 0.005, format!("pam = {value:.5}, want 0.63 ± 0.005"))
}

fn confusion_arithmetic(scratch: &Path) -> Outcome {
    // 643 items with 89 errors, 275 items with 47 errors.
    let fixture = scratch.join("fixture.json");
    std::fs::write(
        &fixture,
        r#"{"train": {"tp": 280, "fn": 44, "fp": 45, "tn": 274}, "test": {"tp": 113, "fn": 24, "fp": 23, "tn": 115}}"#,
    )
    .unwrap();
    let out = scratch.join("fixture-out");
    let code = cli::main_with_args(["puffin-sentiment", "eval", "--fixture", fixture.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    if code != 0 {
        return outcome(false, format!("eval --fixture exited {code}"));
    }
    let report: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap();
    let (train, test) = (&report.report.train.confusion, &report.report.test.confusion);
    let counts_ok = (train.total(), train.errors(), test.total(), test.errors()) == (643, 89, 275, 47);
    let d = &report.display;
    let pass = counts_ok && d.train_ca == "86.15" && d.test_ca == "82.91" && d.gap == "3.24";
    outcome(
        pass,
        format!(
            "displayed train {}% test {}% gap {} (want 86.15 / 82.91 / 3.24; exact 554/643 = {:.6}%)",
            d.train_ca,
            d.test_ca,
            d.gap,
            100.0 * 554.0 / 643.0
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let config = common::small_config();
    let mut worst = (0.0, String::new(), 0);
    for seed in 0..5 {
        let (rel, at) = common::max_relative_error(&config, seed);
        if rel >= worst.0 {
            worst = (rel, at, seed);
        }
    }
    let (fast, time) = within(start.elapsed(), 30.0);
    outcome(
        worst.0 < 1e-4 && fast,
        format!("max relative error {:.2e} (seed {}, {}), {time}", worst.0, worst.2, worst.1),
    )
}

fn apo_optimization() -> Outcome {
    let start = Instant::now();
    let bounds = Bounds::uniform(10, -5.0, 5.0).unwrap();
    let mut finals = Vec::new();
    let mut monotone = true;
    let mut inside = true;
    for seed in 0..10 {
        let config = SwarmConfig {
            pop_size: 30,
            max_iters: 500,
            seed,
            ..SwarmConfig::default()
        };
        let r = optimize(|x: &[f64]| x.iter().map(|v| v * v).sum(), &bounds, &config).unwrap();
        monotone &= r.history.windows(2).all(|w| w[1] <= w[0]);
        inside &= r.evaluations.iter().all(|e| bounds.contains(&e.position));
        finals.push(r.best_fitness);
    }
    finals.sort_by(f64::total_cmp);
    let median = (finals[4] + finals[5]) / 2.0;
    let (fast, time) = within(start.elapsed(), 60.0);
    outcome(
        median <= 1e-2 && monotone && inside && fast,
        format!("median best {median:.3e}, history monotone {monotone}, in bounds {inside}, {time}"),
    )
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(0, "acceptance.metrics", 0);
    let mut worst_kf: f64 = 0.0;
    for _ in 0..1000 {
        let cm = loop {
            let cm = ConfusionMatrix::new(
                r.random_range(0..=100),
                r.random_range(0..=100),
                r.random_range(0..=100),
                r.random_range(0..=100),
            );
            if cm.total() > 0 {
                break cm;
            }
        };
        let (k, f) = common::brute_force_kappa_f(&cm);
        worst_kf = worst_kf.max((kappa(&cm).unwrap() - k).abs()).max((f_measure(&cm).unwrap() - f).abs());
    }
    let mut worst_auc: f64 = 0.0;
    let mut datasets = 0;
    for n in 2..=12 {
        for _ in 0..200 {
            let labels: Vec<Label> = (0..n).map(|_| Label::from_index(r.random_range(0..2))).collect();
            if !(labels.contains(&Label::Positive) && labels.contains(&Label::Negative)) {
                continue;
            }
            // Coarse scores so ties are common.
            let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..5) as f64 / 4.0).collect();
            let a = auc(&scores, &labels).unwrap();
            let pairwise = common::pairwise_auc(&scores, &labels);
            let trapezoid = common::trapezoid_auc(&scores, &labels);
            worst_auc = worst_auc.max((a - pairwise).abs()).max((pairwise - trapezoid).abs());
            datasets += 1;
        }
    }
    let (fast, time) = within(start.elapsed(), 30.0);
    outcome(
        worst_kf <= 1e-12 && worst_auc <= 1e-12 && fast,
        format!("kappa/F max diff {worst_kf:.1e} over 1000 matrices, AUC max diff {worst_auc:.1e} over {datasets} datasets, {time}"),
    )
}

struct EndToEnd {
    out: PathBuf,
    test_ca: f64,
    majority: f64,
    first_loss: f64,
    final_loss: f64,
    seconds: f64,
}

fn end_to_end(out: &Path) -> Result<EndToEnd, String> {
    let start = Instant::now();
    let data = common::toy_corpus();
    let out_s = out.to_str().unwrap();
    let steps: [&[&str]; 4] = [
        &["prep", "--data", data.to_str().unwrap()],
        &["tune", "--pop", "6", "--iters", "5", "--batch-size", "16"],
        &["train", "--epochs", "50", "--batch-size", "16"],
        &["eval"],
    ];
    for step in steps {
        let mut args = vec!["puffin-sentiment"];
        args.extend_from_slice(step);
        args.extend(["--out", out_s]);
        let code = cli::main_with_args(&args);
        if code != 0 {
            return Err(format!("`{}` exited {code}", step.join(" ")));
        }
    }
    let report: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap();
    let cm = report.report.test.confusion;
    let positives = (cm.tp + cm.fn_) as f64;
    let majority = positives.max(cm.total() as f64 - positives) / cm.total() as f64;
    let curve = std::fs::read_to_string(out.join(CURVE_FILE)).unwrap();
    let losses: Vec<f64> = curve
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    Ok(EndToEnd {
        out: out.to_path_buf(),
        test_ca: report.report.test.ca,
        majority,
        first_loss: losses[0],
        final_loss: *losses.last().unwrap(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn end_to_end_learning(run: &Result<EndToEnd, String>) -> Outcome {
    let run = match run {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let corpus = load_corpus(common::toy_corpus()).unwrap();
    let accurate = run.test_ca >= 0.90 && run.test_ca >= run.majority + 0.20;
    let decreasing = run.final_loss < run.first_loss;
    let start_regime = (0.60..=0.75).contains(&run.first_loss);
    let fast = run.seconds < 300.0;
    outcome(
        corpus.len() >= 200 && accurate && decreasing && start_regime && fast,
        format!(
            "test accuracy {:.4} (majority {:.4}), loss {:.4} -> {:.3e}, first-epoch loss in [0.60, 0.75]: {start_regime}, {:.1}s of 300s",
            run.test_ca, run.majority, run.first_loss, run.final_loss, run.seconds
        ),
    )
}

fn determinism(first: &Result<EndToEnd, String>, scratch: &Path) -> Outcome {
    let first = match first {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("first run failed: {e}")),
    };
    let second = match end_to_end(&scratch.join("e2e-repeat")) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("repeat failed: {e}")),
    };
    let differing: Vec<&str> = [REPORT_FILE, CURVE_FILE, BEST_CONFIG_FILE]
        .into_iter()
        .filter(|f| std::fs::read(first.out.join(f)).unwrap() != std::fs::read(second.out.join(f)).unwrap())
        .collect();
    if differing.is_empty() {
        outcome(true, format!("{REPORT_FILE}, {CURVE_FILE}, {BEST_CONFIG_FILE} byte-identical"))
    } else {
        outcome(false, format!("differing: {}", differing.join(", ")))
    }
}

fn normalization_invariants() -> Outcome {
    let mut r = rng::stream(0, "acceptance.invariants", 0);

    let mut attention_dev: f64 = 0.0;
    for _ in 0..100 {
        let n_heads = [1, 2, 4][r.random_range(0..3)];
        let config = ModelConfig {
            d_model: n_heads * 2 * r.random_range(1..=4),
            n_heads,
            n_layers: r.random_range(1..=3),
            d_ff: 16,
            seq_len: r.random_range(1..=10),
            vocab_size: 30,
            positional_encoding: true,
        };
        let params = ParamSet::init(&config, &mut r).unwrap();
        let pad = r.random_range(0..config.seq_len);
        let input = common::random_input(&config, &mut r, pad);
        let (_, cache) = forward(&config, &params, &input).unwrap();
        for weights in cache.attention_weights() {
            for row in weights.rows() {
                attention_dev = attention_dev.max((row.sum() - 1.0).abs());
            }
        }
    }

    let corpus = load_corpus(common::toy_corpus()).unwrap();
    let stop = Stopwords::english();
    let mut docs: Vec<TokenSequence> = corpus.iter().map(|d| preprocess(&d.text, &stop, true)).collect();
    let tfidf = fit_tfidf(fit_vocabulary(&docs, 1, 10_000).unwrap());
    let terms = tfidf.vocab().terms().to_vec();
    for _ in 0..200 {
        let len = r.random_range(0..12);
        let tokens = (0..len)
            .map(|_| if r.random_bool(0.2) { "unseenword".to_string() } else { terms[r.random_range(0..terms.len())].clone() })
            .collect();
        docs.push(TokenSequence { tokens });
    }
    let mut zero_rows = 0;
    let mut norm_dev: f64 = 0.0;
    for doc in &docs {
        let v = tfidf.vectorize(doc, NormMode::RowL2);
        let norm = v.norm();
        if norm == 0.0 {
            zero_rows += 1;
        } else {
            norm_dev = norm_dev.max((norm - 1.0).abs());
        }
    }

    let mut clip_excess = f64::NEG_INFINITY;
    let mut engaged = 0;
    let config = common::small_config();
    for _ in 0..100 {
        let params = ParamSet::init(&config, &mut r).unwrap();
        let input = common::random_input(&config, &mut r, 1);
        let (_, cache) = forward(&config, &params, &input).unwrap();
        let scale = 10f64.powf(r.random_range(-1.0..4.0));
        let mut grads = backward(&config, &params, &cache, [scale, -scale]).unwrap();
        let before = clip_gradients(&mut grads, 10.0);
        if before > 10.0 {
            engaged += 1;
            clip_excess = clip_excess.max(grads.global_norm() - 10.0);
        }
    }

    let pass = attention_dev <= 1e-6 && norm_dev <= 1e-9 && engaged > 0 && clip_excess <= 1e-9;
    outcome(
        pass,
        format!(
            "attention row-sum max dev {attention_dev:.1e}; RowL2 max dev {norm_dev:.1e} over {} rows ({zero_rows} zero); clipped norm excess {clip_excess:.1e} over {engaged} clipped gradients",
            docs.len()
        ),
    )
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let mut all_pass = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all_pass &= o.pass;
        println!("criterion {n} {name}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };

    report(1, "pam reproduction", pam_reproduction());
    report(2, "confusion arithmetic", confusion_arithmetic(scratch.path()));
    report(3, "gradient correctness", gradient_correctness());
    report(4, "apo optimization", apo_optimization());
    report(5, "metric oracles", metric_oracles());
    let e2e = end_to_end(&scratch.path().join("e2e"));
    report(6, "end-to-end learning", end_to_end_learning(&e2e));
    report(7, "determinism", determinism(&e2e, scratch.path()));
    report(8, "normalization invariants", normalization_invariants());

    if !all_pass {
        std::process::exit(1);
    }
}
