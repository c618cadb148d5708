//! The `prep`, `tune`, `train` and `eval` commands.
//!
//! Every command reads an optional JSON [`RunConfig`], applies its flags on
//! top, and writes artifacts under `--out`. JSON artifacts embed the resolved
//! configuration (minus the output directory) so a rerun with the same
//! inputs and seed produces identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Label, LabeledDocument};
use crate::error::{Error, Result};
use crate::evalkit::{
    display_percent, display_points, evaluate_model, pam_polygon, roc_curve, save_csv, score_inputs, write_polygon_csv,
    write_roc_csv, ConfusionMatrix, EvalReport, MetricsReport,
};
use crate::hypertune::{self, BestConfig, SearchSpace, TrialBudget, TuneData};
use crate::puffin::SwarmConfig;
use crate::textprep::{fit_tfidf, fit_vocabulary, preprocess, Stopwords, TfidfModel, TokenSequence};
use crate::tinyformer::{checkpoint, ModelConfig, ModelInput};
use crate::trainer::{initial_params, train, TrainConfig};

pub const TFIDF_FILE: &str = "tfidf_model.json";
pub const MANIFEST_FILE: &str = "split_manifest.json";
pub const TRIALS_FILE: &str = "tuning_trials.csv";
pub const HISTORY_FILE: &str = "apo_history.csv";
pub const BEST_CONFIG_FILE: &str = "best_config.json";
pub const CURVE_FILE: &str = "training_curve.csv";
pub const CHECKPOINT_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";
pub const ROC_FILE: &str = "roc_points.csv";
pub const POLYGON_FILE: &str = "pam_polygon.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    pub min_df: usize,
    pub max_features: usize,
    pub stem: bool,
    pub use_stopwords: bool,
    /// Custom stopword list; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            min_df: 1,
            max_features: 10_000,
            stem: true,
            use_stopwords: true,
            stopwords: None,
        }
    }
}

impl PrepConfig {
    pub fn stopword_list(&self) -> Result<Stopwords> {
        match (&self.stopwords, self.use_stopwords) {
            (_, false) => Ok(Stopwords::none()),
            (Some(path), true) => Stopwords::from_file(path),
            (None, true) => Ok(Stopwords::english()),
        }
    }
}

/// Model shape without the vocabulary size, which comes from the TF-IDF model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelShape {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub seq_len: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        let c = ModelConfig::new(1);
        ModelShape {
            d_model: c.d_model,
            n_heads: c.n_heads,
            n_layers: c.n_layers,
            d_ff: c.d_ff,
            seq_len: c.seq_len,
        }
    }
}

impl ModelShape {
    pub fn config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            n_layers: self.n_layers,
            d_ff: self.d_ff,
            seq_len: self.seq_len,
            vocab_size,
            positional_encoding: true,
        }
    }
}

/// Every knob of the pipeline. `seed` overrides the per-module seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub seed: u64,
    pub split_ratio: f64,
    pub subsample: Option<usize>,
    pub prep: PrepConfig,
    pub model: ModelShape,
    pub train: TrainConfig,
    pub swarm: SwarmConfig,
    pub budget: TrialBudget,
    pub space: SearchSpace,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            seed: 42,
            split_ratio: 0.7,
            subsample: None,
            prep: PrepConfig::default(),
            model: ModelShape::default(),
            train: TrainConfig::default(),
            swarm: SwarmConfig {
                pop_size: 6,
                max_iters: 5,
                ..SwarmConfig::default()
            },
            budget: TrialBudget::default(),
            space: SearchSpace::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }

    fn finish(&mut self) {
        self.train.seed = self.seed;
        self.swarm.seed = self.seed;
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(name = "puffin-sentiment", version, about = "Sentiment classification with a small Transformer tuned by puffin optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the corpus and fit the TF-IDF model on the training part.
    Prep(PrepArgs),
    /// Search learning rate, heads and width with the puffin optimizer.
    Tune(TuneArgs),
    /// Train the classifier and write its curve and checkpoint.
    Train(TrainArgs),
    /// Score the train and test splits and write the metric report.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Labeled CSV corpus with `label` and `text` columns.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// JSON run configuration; flags win over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print a machine-readable summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    /// Stratified cap on the corpus size before splitting.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long)]
    pub no_stem: bool,
    /// One stopword per line, replacing the bundled list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub no_stopwords: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub n_heads: Option<usize>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub seq_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_drop_factor: Option<f64>,
    #[arg(long)]
    pub lr_drop_period: Option<usize>,
    /// Global gradient-norm clipping threshold.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Early-stop after this many epochs without a lower loss.
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub mutation_prob: Option<f64>,
    #[arg(long)]
    pub trial_epochs: Option<usize>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Cap on training examples per trial.
    #[arg(long)]
    pub trial_subsample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Do not apply best_config.json even if the output directory has one.
    #[arg(long)]
    pub ignore_best: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON confusion counts `{"train": {tp, fn, fp, tn}, "test": {...}}`;
    /// skips the model entirely.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &common.data {
        config.data = Some(d.clone());
    }
    set(&mut config.seed, common.seed);
    Ok(config)
}

fn apply_model(config: &mut RunConfig, m: &ModelArgs) {
    set(&mut config.model.d_model, m.d_model);
    set(&mut config.model.n_heads, m.n_heads);
    set(&mut config.model.n_layers, m.n_layers);
    set(&mut config.model.d_ff, m.d_ff);
    set(&mut config.model.seq_len, m.seq_len);
}

fn apply_train(config: &mut RunConfig, t: &TrainFlags) {
    set(&mut config.train.max_epochs, t.epochs);
    set(&mut config.train.batch_size, t.batch_size);
    set(&mut config.train.lr0, t.lr);
    set(&mut config.train.lr_drop_factor, t.lr_drop_factor);
    set(&mut config.train.lr_drop_period, t.lr_drop_period);
    set(&mut config.train.clip_threshold, t.clip);
    if t.patience.is_some() {
        config.train.patience = t.patience;
    }
}

fn out_path(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// What `prep` decided, enough for later commands to rebuild the splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format: String,
    pub data: PathBuf,
    pub corpus_size: usize,
    pub seed: u64,
    pub ratio: f64,
    pub prep: PrepConfig,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub class_counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub vocab_size: usize,
    pub echo: serde_json::Value,
}

pub const MANIFEST_FORMAT: &str = "split-manifest";

fn class_counts(docs: &[LabeledDocument]) -> BTreeMap<String, usize> {
    Label::ALL
        .iter()
        .map(|&l| (l.to_string(), docs.iter().filter(|d| d.label == l).count()))
        .collect()
}

/// Corpus, splits and TF-IDF model as fixed by `prep`.
pub struct Prepared {
    pub manifest: SplitManifest,
    pub tfidf: TfidfModel,
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
}

impl Prepared {
    pub fn load(out: &Path) -> Result<Self> {
        let manifest: SplitManifest = read_json(&out_path(out, MANIFEST_FILE))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Validation(format!("{MANIFEST_FILE}: unexpected format `{}`", manifest.format)));
        }
        let tfidf = TfidfModel::load(out_path(out, TFIDF_FILE))?;
        let docs = corpus::load_corpus(&manifest.data)?;
        if docs.len() != manifest.corpus_size {
            return Err(Error::Validation(format!(
                "{} has {} rows but was prepared with {}",
                manifest.data.display(),
                docs.len(),
                manifest.corpus_size
            )));
        }
        let pick = |ids: &[usize]| -> Result<Vec<LabeledDocument>> {
            ids.iter()
                .map(|&i| {
                    docs.get(i)
                        .cloned()
                        .ok_or_else(|| Error::Validation(format!("manifest id {i} is out of range")))
                })
                .collect()
        };
        let train = pick(&manifest.train_ids)?;
        let test = pick(&manifest.test_ids)?;
        Ok(Prepared {
            manifest,
            tfidf,
            train,
            test,
        })
    }

    pub fn inputs(&self, docs: &[LabeledDocument], seq_len: usize) -> Result<(Vec<ModelInput>, Vec<usize>)> {
        let stop = self.manifest.prep.stopword_list()?;
        let inputs = docs
            .iter()
            .map(|d| ModelInput::from_document(&preprocess(&d.text, &stop, self.manifest.prep.stem), &self.tfidf, seq_len))
            .collect();
        Ok((inputs, docs.iter().map(|d| d.label.index()).collect()))
    }

    /// Embedding rows: one per term plus PAD.
    pub fn vocab_size(&self) -> usize {
        self.tfidf.vocab().len() + 1
    }
}

/// Summary lines printed after a command, or one JSON object with `--json`.
struct Summary {
    json: bool,
    value: serde_json::Map<String, serde_json::Value>,
    lines: Vec<String>,
}

impl Summary {
    fn new(command: &str, json: bool) -> Self {
        let mut value = serde_json::Map::new();
        value.insert("command".into(), command.into());
        Summary {
            json,
            value,
            lines: Vec::new(),
        }
    }

    fn field(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.value.insert(key.into(), value.into());
    }

    fn line(&mut self, line: String) {
        self.lines.push(line);
    }

    fn print(self) {
        if self.json {
            println!("{}", serde_json::Value::Object(self.value));
        } else {
            for l in self.lines {
                println!("{l}");
            }
        }
    }
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

pub fn cmd_prep(args: &PrepArgs) -> Result<()> {
    let mut config = base_config(&args.common)?;
    set(&mut config.split_ratio, args.split_ratio);
    if args.subsample.is_some() {
        config.subsample = args.subsample;
    }
    set(&mut config.prep.min_df, args.min_df);
    set(&mut config.prep.max_features, args.max_features);
    if args.no_stem {
        config.prep.stem = false;
    }
    if args.no_stopwords {
        config.prep.use_stopwords = false;
    }
    if args.stopwords.is_some() {
        config.prep.stopwords = args.stopwords.clone();
    }
    config.finish();

    let data = config
        .data
        .clone()
        .ok_or_else(|| Error::Argument("prep needs --data or a config with `data`".into()))?;
    let docs = corpus::load_corpus(&data)?;
    let corpus_size = docs.len();
    let docs = match config.subsample {
        Some(n) => corpus::subsample(&docs, n, config.seed)?,
        None => docs,
    };
    let split = corpus::stratified_split(&docs, config.split_ratio, config.seed)?;
    let stop = config.prep.stopword_list()?;
    let train_tokens: Vec<TokenSequence> =
        split.train.iter().map(|d| preprocess(&d.text, &stop, config.prep.stem)).collect();
    let vocab = fit_vocabulary(&train_tokens, config.prep.min_df, config.prep.max_features)?;
    let tfidf = fit_tfidf(vocab);

    let out = &args.common.out;
    create_out(out)?;
    tfidf.save(out_path(out, TFIDF_FILE))?;
    let mut counts = BTreeMap::new();
    counts.insert("train".to_string(), class_counts(&split.train));
    counts.insert("test".to_string(), class_counts(&split.test));
    let manifest = SplitManifest {
        format: MANIFEST_FORMAT.into(),
        data,
        corpus_size,
        seed: config.seed,
        ratio: config.split_ratio,
        prep: config.prep.clone(),
        train_ids: split.train.iter().map(|d| d.id).collect(),
        test_ids: split.test.iter().map(|d| d.id).collect(),
        class_counts: counts.clone(),
        vocab_size: tfidf.vocab().len(),
        echo: config.echo(),
    };
    write_json(&out_path(out, MANIFEST_FILE), &manifest)?;

    let mut s = Summary::new("prep", args.common.json);
    s.field("corpus_size", docs.len());
    s.field("train", split.train.len());
    s.field("test", split.test.len());
    s.field("vocab_size", tfidf.vocab().len());
    s.field("class_counts", serde_json::to_value(&counts)?);
    s.line(format!("corpus: {} documents", docs.len()));
    s.line(format!("split: {} train / {} test", split.train.len(), split.test.len()));
    s.line(format!("vocabulary: {} terms", tfidf.vocab().len()));
    for (part, c) in &counts {
        s.line(format!("{part} classes: {c:?}"));
    }
    s.line(format!("artifacts in {}", out.display()));
    s.print();
    Ok(())
}

pub fn cmd_tune(args: &TuneArgs) -> Result<()> {
    let mut config = base_config(&args.common)?;
    apply_model(&mut config, &args.model);
    apply_train(&mut config, &args.train);
    set(&mut config.swarm.pop_size, args.pop);
    set(&mut config.swarm.max_iters, args.iters);
    set(&mut config.swarm.mutation_prob, args.mutation_prob);
    set(&mut config.budget.trial_epochs, args.trial_epochs);
    set(&mut config.budget.val_fraction, args.val_fraction);
    if args.trial_subsample.is_some() {
        config.budget.subsample = args.trial_subsample;
    }
    config.finish();

    let out = &args.common.out;
    let prepared = Prepared::load(out)?;
    config.data = Some(prepared.manifest.data.clone());
    let (inputs, labels) = prepared.inputs(&prepared.train, config.model.seq_len)?;
    let base_model = config.model.config(prepared.vocab_size());
    let data = TuneData::carve(&inputs, &labels, &config.budget, base_model, config.train.clone())?;
    let result = hypertune::tune(&config.space, &config.budget, &config.swarm, &data)?;

    save_csv(out_path(out, TRIALS_FILE), |buf| hypertune::write_trials_csv(&result.trials, buf))?;
    result.optimizer.save_history_csv(out_path(out, HISTORY_FILE))?;
    let best = BestConfig::new(&result.best, result.best_fitness, config.echo());
    best.save(out_path(out, BEST_CONFIG_FILE))?;

    let mut s = Summary::new("tune", args.common.json);
    s.field("trials", result.trials.len());
    s.field("best", serde_json::to_value(result.best)?);
    s.field("best_fitness", result.best_fitness);
    s.line(format!("trials: {}", result.trials.len()));
    s.line(format!(
        "best: lr {:.3e}, heads {}, d_model {}",
        result.best.lr, result.best.n_heads, result.best.d_model
    ));
    s.line(format!("best fitness (1 - validation accuracy): {:.4}", result.best_fitness));
    s.print();
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut config = base_config(&args.common)?;
    apply_model(&mut config, &args.model);
    apply_train(&mut config, &args.train);
    let out = &args.common.out;
    let best_path = out_path(out, BEST_CONFIG_FILE);
    let tuned = !args.ignore_best && best_path.exists();
    if tuned {
        let best = BestConfig::load(&best_path)?;
        config.model.d_model = best.d_model;
        config.model.n_heads = best.n_heads;
        config.model.d_ff = best.d_ff;
        config.train.lr0 = best.lr;
    }
    config.finish();

    let prepared = Prepared::load(out)?;
    config.data = Some(prepared.manifest.data.clone());
    let (inputs, labels) = prepared.inputs(&prepared.train, config.model.seq_len)?;
    let model = config.model.config(prepared.vocab_size());
    model.validate()?;
    let params = initial_params(&model, config.seed)?;
    let (params, log) = train(&config.train, &model, params, &inputs, &labels)?;

    log.save_csv(out_path(out, CURVE_FILE))?;
    checkpoint::save(out_path(out, CHECKPOINT_FILE), &model, &params, &config.echo())?;

    let mut s = Summary::new("train", args.common.json);
    s.field("tuned", tuned);
    s.field("model", serde_json::to_value(&model)?);
    s.field("epochs", log.epochs.len());
    s.line(format!(
        "model: d_model {}, heads {}, layers {}, d_ff {}{}",
        model.d_model,
        model.n_heads,
        model.n_layers,
        model.d_ff,
        if tuned { " (from best_config.json)" } else { "" }
    ));
    s.line(format!("epochs: {}", log.epochs.len()));
    if let (Some(first), Some(last)) = (log.epochs.first(), log.epochs.last()) {
        s.field("first_loss", first.loss);
        s.field("final_loss", last.loss);
        s.field("final_accuracy", last.accuracy);
        s.line(format!("loss: {:.4} -> {:.4}", first.loss, last.loss));
        s.line(format!("training accuracy: {}%", display_percent(last.accuracy)));
    }
    s.line(format!("artifacts in {}", out.display()));
    s.print();
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fixture {
    pub train: ConfusionMatrix,
    pub test: ConfusionMatrix,
}

/// Displayed (two-decimal) accuracies and gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Display {
    pub train_ca: String,
    pub test_ca: String,
    pub gap: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub source: String,
    pub seed: u64,
    #[serde(flatten)]
    pub report: EvalReport,
    pub display: Display,
    pub echo: serde_json::Value,
}

pub const REPORT_FORMAT: &str = "eval-report";

fn report_file(report: EvalReport, source: &str, config: &RunConfig) -> ReportFile {
    let display = Display {
        train_ca: display_percent(report.train.ca),
        test_ca: display_percent(report.test.ca),
        gap: display_points(report.gap_pp),
    };
    ReportFile {
        format: REPORT_FORMAT.into(),
        source: source.into(),
        seed: config.seed,
        report,
        display,
        echo: config.echo(),
    }
}

/// Report from literal confusion counts.
pub fn fixture_report(fixture: &Fixture) -> Result<EvalReport> {
    Ok(EvalReport::new(
        MetricsReport::from_confusion(fixture.train)?,
        MetricsReport::from_confusion(fixture.test)?,
    ))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut config = base_config(&args.common)?;
    let out = &args.common.out;
    create_out(out)?;
    let file = if let Some(path) = &args.fixture {
        config.finish();
        let fixture: Fixture = read_json(path)?;
        report_file(fixture_report(&fixture)?, "fixture", &config)
    } else {
        let ckpt = checkpoint::load(out_path(out, CHECKPOINT_FILE))?;
        if let Ok(saved) = serde_json::from_value::<RunConfig>(ckpt.echo.clone()) {
            config = saved;
            set(&mut config.seed, args.common.seed);
        }
        config.finish();
        let prepared = Prepared::load(out)?;
        if prepared.vocab_size() != ckpt.config.vocab_size {
            return Err(Error::Validation(format!(
                "checkpoint expects {} embedding rows, TF-IDF model gives {}",
                ckpt.config.vocab_size,
                prepared.vocab_size()
            )));
        }
        let seq_len = ckpt.config.seq_len;
        let (train_inputs, _) = prepared.inputs(&prepared.train, seq_len)?;
        let (test_inputs, _) = prepared.inputs(&prepared.test, seq_len)?;
        let train_labels: Vec<Label> = prepared.train.iter().map(|d| d.label).collect();
        let test_labels: Vec<Label> = prepared.test.iter().map(|d| d.label).collect();
        let train_report = evaluate_model(&ckpt.config, &ckpt.params, &train_inputs, &train_labels)?;
        let (test_preds, test_scores) = score_inputs(&ckpt.config, &ckpt.params, &test_inputs)?;
        let test_report = MetricsReport::from_scores(&test_preds, &test_scores, &test_labels)?;

        let roc = roc_curve(&test_scores, &test_labels)?;
        save_csv(out_path(out, ROC_FILE), |buf| write_roc_csv(&roc, buf))?;
        let values = test_report.polygon_values().expect("model reports carry an AUC");
        let polygon = pam_polygon(values)?;
        save_csv(out_path(out, POLYGON_FILE), |buf| write_polygon_csv(&polygon, buf))?;
        report_file(EvalReport::new(train_report, test_report), "model", &config)
    };
    write_json(&out_path(out, REPORT_FILE), &file)?;

    let r = &file.report;
    let t = &r.test;
    let mut s = Summary::new("eval", args.common.json);
    s.field("train_ca", r.train.ca);
    s.field("test_ca", r.test.ca);
    s.field("gap_pp", r.gap_pp);
    s.field("test", serde_json::to_value(t)?);
    s.line(format!("train accuracy: {}%", file.display.train_ca));
    s.line(format!("test accuracy: {}%", file.display.test_ca));
    s.line(format!("gap: {} percentage points", file.display.gap));
    s.line(format!(
        "test SE {:.4} SP {:.4} kappa {:.4} F {:.4}{}{}",
        t.se,
        t.sp,
        t.kappa,
        t.f,
        t.auc.map(|a| format!(" AUC {a:.4}")).unwrap_or_default(),
        t.pam.map(|p| format!(" PAM {p:.4}")).unwrap_or_default(),
    ));
    s.print();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Prep(a) => cmd_prep(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
