//! Binary classification metrics with Positive as the class of interest:
//! confusion counts, accuracy, sensitivity, specificity, Cohen's kappa,
//! F-measure, rank-based AUC, the ROC curve and the polygon area metric.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::tinyformer::{forward, positive_probability, predict_class, ModelConfig, ModelInput, ParamSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn errors(&self) -> u64 {
        self.fn_ + self.fp
    }

    fn nonempty(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::Argument("metrics need a non-empty confusion matrix".into())),
            n => Ok(n as f64),
        }
    }
}

pub fn confusion(preds: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Argument("no predictions".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, y) in preds.iter().zip(labels) {
        match (y, p) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Positive, Label::Negative) => cm.fn_ += 1,
            (Label::Negative, Label::Positive) => cm.fp += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.correct() as f64 / cm.nonempty()?)
}

/// Sensitivity `tp / (tp + fn)` and specificity `tn / (tn + fp)`.
pub fn rates(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::Argument("sensitivity is undefined without Positive examples".into()));
    }
    if cm.tn + cm.fp == 0 {
        return Err(Error::Argument("specificity is undefined without Negative examples".into()));
    }
    Ok((
        cm.tp as f64 / (cm.tp + cm.fn_) as f64,
        cm.tn as f64 / (cm.tn + cm.fp) as f64,
    ))
}

/// Cohen's kappa; 0 when chance agreement is already 1.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty()?;
    let p_o = cm.correct() as f64 / n;
    let pos = ((cm.tp + cm.fn_) * (cm.tp + cm.fp)) as f64;
    let neg = ((cm.tn + cm.fp) * (cm.tn + cm.fn_)) as f64;
    let p_e = (pos + neg) / (n * n);
    if p_e == 1.0 {
        return Ok(0.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// F1 for the Positive class. 0 when there are no true positives but some
/// errors, 1 when there are neither.
pub fn f_measure(cm: &ConfusionMatrix) -> Result<f64> {
    cm.nonempty()?;
    if cm.tp == 0 {
        return Ok(if cm.errors() == 0 { 1.0 } else { 0.0 });
    }
    let precision = cm.tp as f64 / (cm.tp + cm.fp) as f64;
    let recall = cm.tp as f64 / (cm.tp + cm.fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

fn check_scored(scores: &[f64], labels: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Argument("AUC needs both classes present".into()));
    }
    Ok((pos, neg))
}

/// Probability that a random Positive outscores a random Negative, ties
/// counted half. Computed from mid-ranks in `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (pos, neg) = check_scored(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k] == Label::Positive).count();
        rank_sum += mid_rank * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above this value are called Positive. The first point
    /// uses `+inf`.
    pub threshold: f64,
}

/// ROC points from (0, 0) to (1, 1), one per distinct score, descending.
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = check_scored(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            match labels[order[i]] {
                Label::Positive => tp += 1,
                Label::Negative => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: t,
        });
    }
    Ok(points)
}

pub fn write_roc_csv<W: Write>(points: &[RocPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("roc_points.csv", e))?;
    Ok(())
}

/// Hexagon axis order for the polygon area metric.
pub const PAM_AXES: [&str; 6] = ["CA", "SE", "SP", "AUC", "Kappa", "F"];

/// Area of the hexagon with radii `values` on axes 60 degrees apart, divided
/// by the area of the unit regular hexagon: `sum(v[i] * v[i+1 mod 6]) / 6`.
pub fn pam(values: [f64; 6]) -> Result<f64> {
    for (axis, v) in PAM_AXES.iter().zip(values) {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Argument(format!("PAM axis {axis} must be in [0, 1], got {v}")));
        }
    }
    Ok((0..6).map(|i| values[i] * values[(i + 1) % 6]).sum::<f64>() / 6.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonVertex {
    pub axis: String,
    pub value: f64,
    pub x: f64,
    pub y: f64,
}

/// Vertex `i` sits at angle `pi/2 - i*pi/3`, so CA points straight up and the
/// axes run clockwise.
pub fn pam_polygon(values: [f64; 6]) -> Result<Vec<PolygonVertex>> {
    pam(values)?;
    Ok(PAM_AXES
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (axis, v))| {
            let theta = PI / 2.0 - i as f64 * PI / 3.0;
            PolygonVertex {
                axis: axis.to_string(),
                value: v,
                x: v * theta.cos(),
                y: v * theta.sin(),
            }
        })
        .collect())
}

pub fn write_polygon_csv<W: Write>(vertices: &[PolygonVertex], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "value", "x", "y"])?;
    for v in vertices {
        w.write_record([v.axis.clone(), v.value.to_string(), v.x.to_string(), v.y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("pam_polygon.csv", e))?;
    Ok(())
}

/// Full metric suite for one split. `auc` and `pam` are absent when only
/// confusion counts are known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub ca: f64,
    pub se: f64,
    pub sp: f64,
    pub auc: Option<f64>,
    pub kappa: f64,
    pub f: f64,
    pub pam: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let (se, sp) = rates(&cm)?;
        Ok(MetricsReport {
            confusion: cm,
            ca: accuracy(&cm)?,
            se,
            sp,
            auc: None,
            kappa: kappa(&cm)?,
            f: f_measure(&cm)?,
            pam: None,
        })
    }

    /// `scores` are Positive-class probabilities; `preds` the hard calls.
    pub fn from_scores(preds: &[Label], scores: &[f64], labels: &[Label]) -> Result<Self> {
        let mut report = MetricsReport::from_confusion(confusion(preds, labels)?)?;
        let area = auc(scores, labels)?;
        report.auc = Some(area);
        report.pam = Some(pam(report.pam_values(area))?);
        Ok(report)
    }

    fn pam_values(&self, auc: f64) -> [f64; 6] {
        [self.ca, self.se, self.sp, auc, self.kappa.max(0.0), self.f]
    }

    /// The six polygon radii, with kappa clamped at 0. Needs an AUC.
    pub fn polygon_values(&self) -> Option<[f64; 6]> {
        self.auc.map(|a| self.pam_values(a))
    }
}

/// `|train_ca - test_ca|` in percentage points.
pub fn generalization_gap(train_ca: f64, test_ca: f64) -> f64 {
    (train_ca - test_ca).abs() * 100.0
}

/// Formats a fraction as a percentage rounded half away from zero to two
/// decimals, e.g. `0.82909` becomes `"82.91"`.
pub fn display_percent(fraction: f64) -> String {
    display_points(fraction * 100.0)
}

/// Rounds a percentage-point value half away from zero to two decimals.
pub fn display_points(points: f64) -> String {
    format!("{:.2}", (points * 100.0).round() / 100.0)
}

/// Train and test metrics with their accuracy gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train: MetricsReport,
    pub test: MetricsReport,
    pub gap_pp: f64,
}

impl EvalReport {
    pub fn new(train: MetricsReport, test: MetricsReport) -> Self {
        let gap_pp = generalization_gap(train.ca, test.ca);
        EvalReport { train, test, gap_pp }
    }
}

/// Hard predictions and Positive-class probabilities for every input.
pub fn score_inputs(config: &ModelConfig, params: &ParamSet, inputs: &[ModelInput]) -> Result<(Vec<Label>, Vec<f64>)> {
    let scored: Vec<Result<(Label, f64)>> = inputs
        .par_iter()
        .map(|input| {
            let (logits, _) = forward(config, params, input)?;
            Ok((Label::from_index(predict_class(logits)), positive_probability(logits)))
        })
        .collect();
    scored.into_iter().collect::<Result<Vec<_>>>().map(|v| v.into_iter().unzip())
}

pub fn evaluate_model(
    config: &ModelConfig,
    params: &ParamSet,
    inputs: &[ModelInput],
    labels: &[Label],
) -> Result<MetricsReport> {
    let (preds, scores) = score_inputs(config, params, inputs)?;
    MetricsReport::from_scores(&preds, &scores, labels)
}

pub fn save_csv(path: impl AsRef<Path>, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
